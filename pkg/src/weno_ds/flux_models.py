"""Flux functions, Lax-Friedrichs splitting and Euler characteristic frames."""

import logging
from dataclasses import dataclass
from typing import Any, Tuple

import numpy as np

from . import autodiff as ad
from .errors import NonPhysicalState

logger = logging.getLogger(__name__)

GAMMA = 1.4
BL_SAMPLES = 1024

# ---------------------------------------------------------------------------
# Scalar fluxes
# ---------------------------------------------------------------------------

def transport_flux(u):
    return 1.0 * u

def transport_dflux(u):
    return np.ones_like(ad.value_of(u))

def burgers_flux(u):
    return 0.5 * u * u

def burgers_dflux(u):
    return ad.value_of(u)

def _bl_denominator(u, a: float):
    return u * u + a * (1.0 - u) * (1.0 - u)

def bl_flux(u, a: float):
    """Buckley-Leverett fractional flow u^2 / (u^2 + a (1 - u)^2).

    Raises:
        ValueError: If the denominator is not positive somewhere.
    """
    den = _bl_denominator(u, a)
    if np.any(ad.value_of(den) <= 0):
        raise ValueError(f"Buckley-Leverett denominator is non-positive for a={a}")
    return u * u / den

def bl_dflux(u, a: float) -> np.ndarray:
    u = ad.value_of(u)
    den = _bl_denominator(u, a)
    if np.any(den <= 0):
        raise ValueError(f"Buckley-Leverett denominator is non-positive for a={a}")
    return 2.0 * a * u * (1.0 - u) / (den * den)

def max_abs_wave_speed(dflux, u) -> float:
    return float(np.max(np.abs(dflux(ad.value_of(u)))))

def bl_wave_speed(u, a: float, samples: int = BL_SAMPLES) -> float:
    """max |f'| over a dense sample of [min u, max u]."""
    u = ad.value_of(u)
    lo, hi = float(np.min(u)), float(np.max(u))
    grid = np.linspace(lo, hi, samples) if hi > lo else np.array([lo])
    return float(np.max(np.abs(bl_dflux(grid, a))))

def lf_split(f, u, alpha) -> Tuple[Any, Any]:
    """Global Lax-Friedrichs splitting f^{+-} = (f +- alpha u) / 2.

    Raises:
        ValueError: If alpha is not finite.
    """
    if not np.all(np.isfinite(ad.value_of(alpha))):
        raise ValueError(f"Splitting speed must be finite, got {alpha}")
    return 0.5 * (f + alpha * u), 0.5 * (f - alpha * u)

# ---------------------------------------------------------------------------
# Euler equations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimitiveState:
    """Represents one constant (rho, u, p) state."""
    rho: float
    u: float
    p: float

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.rho, self.u, self.p)

    def sound_speed(self, gamma: float = GAMMA) -> float:
        return float(np.sqrt(gamma * self.p / self.rho))

def conserved_from_primitive(rho, u, p, gamma: float = GAMMA) -> np.ndarray:
    """Stack (rho, rho u, E) along a new leading axis."""
    rho, u, p = (np.asarray(v, dtype=float) for v in (rho, u, p))
    rho, u, p = np.broadcast_arrays(rho, u, p)
    energy = p / (gamma - 1.0) + 0.5 * rho * u * u
    return np.stack([rho, rho * u, energy])

def primitive_variables(state, gamma: float = GAMMA):
    """(rho, u, p) from a conserved state of shape (3, ...) without checks."""
    rho = state[0]
    u = state[1] / rho
    p = (gamma - 1.0) * (state[2] - 0.5 * state[1] * u)
    return rho, u, p

def primitive_from_conserved(state, gamma: float = GAMMA) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Checked conversion to (rho, u, p).

    Raises:
        NonPhysicalState: With the index of the first point where the density
            or pressure is not positive.
    """
    state = np.asarray(ad.value_of(state), dtype=float)
    rho = state[0]
    _check_positive(rho, "rho")
    rho, u, p = primitive_variables(state, gamma)
    _check_positive(p, "p")
    return rho, u, p

def _check_positive(values: np.ndarray, quantity: str) -> None:
    bad = ~(np.asarray(values) > 0)
    if np.any(bad):
        location = int(np.flatnonzero(bad.ravel())[0])
        raise NonPhysicalState(f"Non-positive {quantity}", location=location, quantity=quantity)

def euler_flux(state, gamma: float = GAMMA):
    """Physical flux (rho u, rho u^2 + p, u (E + p)) of a conserved state."""
    rho, u, p = primitive_variables(state, gamma)
    return ad.stack([state[1], state[1] * u + p, u * (state[2] + p)], axis=0)

def sound_speed(rho, p, gamma: float = GAMMA):
    return ad.sqrt(gamma * p / rho)

def euler_max_signal(state, gamma: float = GAMMA) -> float:
    """max_i (c_i + |u_i|) of a physical state."""
    rho, u, p = primitive_from_conserved(state, gamma)
    return float(np.max(np.sqrt(gamma * p / rho) + np.abs(u)))

@dataclass
class RoeFrame:
    """Roe averages and eigenvector matrices, one per interface.

    R[j, :, m] is the m-th right eigenvector at interface j, ordered by
    eigenvalue u - c, u, u + c; L[j] = inverse of R[j].
    """
    u: Any
    H: Any
    c: Any
    R: Any
    L: Any

    @property
    def eigenvalues(self):
        return ad.stack([self.u - self.c, self.u, self.u + self.c], axis=0)

def roe_frame(left: Tuple[Any, Any, Any], right: Tuple[Any, Any, Any],
              gamma: float = GAMMA) -> RoeFrame:
    """Roe-averaged frame between primitive states.

    Args:
        left: (rho, u, p) arrays on the left of each interface
        right: (rho, u, p) arrays on the right of each interface
        gamma: Ratio of specific heats

    Raises:
        NonPhysicalState: If the averaged sound speed squared is not positive.
    """
    rho_l, u_l, p_l = left
    rho_r, u_r, p_r = right
    s_l = ad.sqrt(rho_l)
    s_r = ad.sqrt(rho_r)
    h_l = (p_l / (gamma - 1.0) + 0.5 * rho_l * u_l * u_l + p_l) / rho_l
    h_r = (p_r / (gamma - 1.0) + 0.5 * rho_r * u_r * u_r + p_r) / rho_r
    weight = s_l + s_r
    u = (s_l * u_l + s_r * u_r) / weight
    H = (s_l * h_l + s_r * h_r) / weight
    c2 = (gamma - 1.0) * (H - 0.5 * u * u)
    _check_positive(ad.value_of(c2), "c^2")
    c = ad.sqrt(c2)

    one = np.ones(np.shape(ad.value_of(u)))
    zero = np.zeros(np.shape(ad.value_of(u)))
    R = ad.stack([
        ad.stack([one, one, one], axis=-1),
        ad.stack([u - c, u, u + c], axis=-1),
        ad.stack([H - u * c, 0.5 * u * u, H + u * c], axis=-1),
    ], axis=-2)

    b1 = (gamma - 1.0) / c2
    b2 = 0.5 * b1 * u * u
    L = ad.stack([
        ad.stack([0.5 * (b2 + u / c), -0.5 * (b1 * u + 1.0 / c), 0.5 * b1], axis=-1),
        ad.stack([1.0 - b2, b1 * u, -b1 + zero], axis=-1),
        ad.stack([0.5 * (b2 - u / c), -0.5 * (b1 * u - 1.0 / c), 0.5 * b1], axis=-1),
    ], axis=-2)
    return RoeFrame(u=u, H=H, c=c, R=R, L=L)

def characteristic_project(frame: RoeFrame, values):
    """Apply L per interface.

    ``values`` is (3, n_interfaces) for one state per interface or
    (3, n_interfaces, width) for a stencil of states per interface.
    """
    if np.ndim(ad.value_of(values)) == 3:
        return ad.einsum("jab,bjw->ajw", frame.L, values)
    return ad.einsum("jab,bj->aj", frame.L, values)

def characteristic_unproject(frame: RoeFrame, values):
    """Apply R per interface; inverse of ``characteristic_project``."""
    if np.ndim(ad.value_of(values)) == 3:
        return ad.einsum("jab,bjw->ajw", frame.R, values)
    return ad.einsum("jab,bj->aj", frame.R, values)

def characteristic_speeds(state, frame: RoeFrame, gamma: float = GAMMA) -> np.ndarray:
    """Per-field LF speed: max |lambda_m| over local nodes and Roe states."""
    rho, u, p = primitive_variables(np.asarray(ad.value_of(state)), gamma)
    c = np.sqrt(gamma * p / rho)
    local = np.stack([np.abs(u - c), np.abs(u), np.abs(u + c)])
    roe = np.abs(ad.value_of(frame.eigenvalues))
    return np.maximum(local.max(axis=-1), roe.max(axis=-1))
