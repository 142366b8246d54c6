"""Conservative finite-difference operator L(u) = -(F_{i+1/2} - F_{i-1/2}) / dx.

Interfaces are numbered j = 0..n for n stored nodes; interface j sits
between nodes j-1 and j, so node i is bounded by interfaces i and i+1.

For JS and Z weights each interface carries one flux. WENO-DS scales the
indicators with the multipliers of the node being updated, so node i gets
its own right flux at i+1/2 and left flux at i-1/2, both built with its
triple (delta_{i-1}, delta_i, delta_{i+1}).
"""

import logging
from typing import Optional, Tuple

import numpy as np

from . import autodiff as ad
from . import flux_models as fm
from .deep_smoothness import MultiplierSource, shift_multipliers
from .mesh import GHOST_WIDTH, pad
from .problems import EulerProblem, Problem, ScalarProblem
from .weno_kernel import SchemeConfig, Weighting, interface_flux

logger = logging.getLogger(__name__)

def ghost_width(cfg: SchemeConfig, multipliers: Optional[MultiplierSource]) -> int:
    if cfg.weighting is Weighting.DS and multipliers is not None:
        return max(GHOST_WIDTH, multipliers.radius + 2)
    return GHOST_WIDTH

def _require_multipliers(cfg: SchemeConfig, multipliers: Optional[MultiplierSource]) -> None:
    if cfg.weighting is Weighting.DS and multipliers is None:
        raise ValueError("WENO-DS needs a multiplier source")

def wave_speeds(values, problem: Problem):
    """LF splitting speed for the current state, detached from any tape.

    Scalar problems get a float, Euler problems one speed per field.
    """
    values = ad.value_of(values)
    if isinstance(problem, EulerProblem):
        padded = pad(values, problem.boundary, GHOST_WIDTH)
        frame = _interface_frame(padded, values.shape[-1], GHOST_WIDTH, problem.gamma)
        return fm.characteristic_speeds(padded, frame, problem.gamma)
    return problem.wave_speed(values)

def scalar_rhs(u, problem: ScalarProblem, dx: float, cfg: SchemeConfig,
               multipliers: Optional[MultiplierSource] = None, alpha: Optional[float] = None):
    _require_multipliers(cfg, multipliers)
    n = np.shape(ad.value_of(u))[-1]
    g = ghost_width(cfg, multipliers)
    padded = pad(u, problem.boundary, g)
    if alpha is None:
        alpha = problem.wave_speed(u)
    f_plus, f_minus = fm.lf_split(problem.flux(padded), padded, alpha)

    offset = g - 3
    # Interface j: positive stencil nodes j-3..j+1, negative stencil j+2..j-2
    wp = tuple(f_plus[offset + k:offset + k + n + 1] for k in range(5))
    wm = tuple(f_minus[offset + 5 - k:offset + 5 - k + n + 1] for k in range(5))

    if cfg.weighting is not Weighting.DS:
        flux = interface_flux(wp, cfg) + interface_flux(wm, cfg)
        return -(flux[1:] - flux[:-1]) / dx

    start = g - 2 - multipliers.radius
    # Multipliers of nodes -1..n
    dp = multipliers.node_multipliers(f_plus, True)[start:start + n + 2]
    dm = multipliers.node_multipliers(f_minus, False)[start:start + n + 2]
    tp = shift_multipliers(dp)
    tm = shift_multipliers(dm, mirrored=True)

    right = (interface_flux(tuple(w[1:] for w in wp), cfg, tp)
             + interface_flux(tuple(w[1:] for w in wm), cfg, tm))
    left = (interface_flux(tuple(w[:-1] for w in wp), cfg, tp)
            + interface_flux(tuple(w[:-1] for w in wm), cfg, tm))
    return -(right - left) / dx

def _interface_frame(padded, n: int, g: int, gamma: float) -> fm.RoeFrame:
    rho, u, p = fm.primitive_variables(padded, gamma)
    left = slice(g - 1, g + n)
    right = slice(g, g + n + 1)
    return fm.roe_frame((rho[left], u[left], p[left]), (rho[right], u[right], p[right]), gamma)

def euler_rhs(state, problem: EulerProblem, dx: float, cfg: SchemeConfig,
              multipliers: Optional[MultiplierSource] = None, alpha: Optional[np.ndarray] = None):
    """Characteristic-wise WENO operator for the Euler system.

    Each interface projects its stencil of states and fluxes with the left
    eigenvectors of its Roe frame, splits every field with its own LF speed,
    reconstructs field by field and maps back with the right eigenvectors.
    """
    _require_multipliers(cfg, multipliers)
    n = np.shape(ad.value_of(state))[-1]
    radius = multipliers.radius if cfg.weighting is Weighting.DS else 0
    g = GHOST_WIDTH + radius
    padded = pad(state, problem.boundary, g)
    flux = fm.euler_flux(padded, problem.gamma)
    frame = _interface_frame(padded, n, g, problem.gamma)
    if alpha is None:
        alpha = fm.characteristic_speeds(ad.value_of(padded), frame, problem.gamma)
    alpha = np.asarray(ad.value_of(alpha), dtype=float)

    width = 6 + 2 * radius
    # Stencil of interface j: nodes j-3-radius .. j+2+radius
    idx = np.arange(n + 1)[:, None] + np.arange(width)[None, :]
    states = padded[:, idx]
    fluxes = flux[:, idx]
    w_char = fm.characteristic_project(frame, states)
    f_char = fm.characteristic_project(frame, fluxes)
    g_plus, g_minus = fm.lf_split(f_char, w_char, alpha[:, None, None])

    wp = tuple(g_plus[:, :, radius + k] for k in range(5))
    wm = tuple(g_minus[:, :, radius + 5 - k] for k in range(5))

    if cfg.weighting is not Weighting.DS:
        fhat = fm.characteristic_unproject(frame, interface_flux(wp, cfg) + interface_flux(wm, cfg))
        return -(fhat[:, 1:] - fhat[:, :-1]) / dx

    # Multipliers of nodes j-2..j+1 for every interface j
    dp = multipliers.node_multipliers(g_plus, True)
    dm = multipliers.node_multipliers(g_minus, False)
    node_lo = _ds_interface_flux(wp, wm, dp, dm, cfg, shift=0)
    node_hi = _ds_interface_flux(wp, wm, dp, dm, cfg, shift=1)
    # node_lo is the right flux of node j-1, node_hi the left flux of node j
    right = fm.characteristic_unproject(frame, node_lo)
    left = fm.characteristic_unproject(frame, node_hi)
    return -(right[:, 1:] - left[:, :-1]) / dx

def _ds_interface_flux(wp: Tuple, wm: Tuple, dp, dm, cfg: SchemeConfig, shift: int):
    tp = tuple(d[..., shift] for d in shift_multipliers(dp))
    tm = tuple(d[..., shift] for d in shift_multipliers(dm, mirrored=True))
    return interface_flux(wp, cfg, tp) + interface_flux(wm, cfg, tm)

def semidiscrete_rhs(values, problem: Problem, dx: float, cfg: SchemeConfig,
                     multipliers: Optional[MultiplierSource] = None, alpha=None):
    """du/dt for a scalar field of shape (n,) or an Euler state of shape (3, n).

    Args:
        values: Stored node values (numpy array or tape Variable)
        problem: Problem supplying flux, boundary policy and wave speeds
        dx: Grid spacing
        cfg: Scheme selection
        multipliers: Multiplier source, required for WENO-DS
        alpha: Frozen splitting speed; recomputed from ``values`` when None

    Raises:
        ValueError: If WENO-DS is requested without multipliers.
    """
    if isinstance(problem, EulerProblem):
        return euler_rhs(values, problem, dx, cfg, multipliers, alpha)
    return scalar_rhs(values, problem, dx, cfg, multipliers, alpha)
