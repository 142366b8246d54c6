"""Reference solutions: cached fine-grid WENO-Z runs and the exact Riemann solver."""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize

from . import flux_models as fm
from .errors import ReferenceMissing, RiemannSolverError
from .mesh import Boundary, Grid1D, read_snapshot, write_snapshot
from .problems import EulerProblem, ProblemFamily, ScalarProblem
from .time_integration import StepPlan, run
from .weno_kernel import SchemeConfig, Weighting

logger = logging.getLogger(__name__)

CACHE_ENV_VAR = "WENO_DS_CACHE"
REFERENCE_FORMAT_VERSION = 1
REFERENCE_INTERVALS = 1024

# Fine-grid step counts per family (1024 intervals)
REFERENCE_STEPS = {
    ProblemFamily.BUCKLEY_LEVERETT: 8960,
    ProblemFamily.BURGERS: 6400,
}

def default_cache_dir() -> Path:
    """Cache directory from WENO_DS_CACHE, else ~/.cache/weno_ds."""
    env = os.environ.get(CACHE_ENV_VAR)
    return Path(env) if env else Path.home() / ".cache" / "weno_ds"

@dataclass
class ReferenceSolution:
    """Reference states on a grid at a list of times."""
    grid: Grid1D
    times: np.ndarray
    states: np.ndarray
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def at_time(self, t: float, tol: float = 1e-12) -> np.ndarray:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"No reference state at t={t}")
        return self.states[k]

    def restrict(self, coarse: Grid1D) -> "ReferenceSolution":
        """Sample the nodes shared with a nested coarse grid."""
        if not coarse.is_nested_in(self.grid):
            raise ValueError(f"Grid with {coarse.n_intervals} intervals is not nested in "
                             f"the {self.grid.n_intervals}-interval reference grid")
        stride = self.grid.n_intervals // coarse.n_intervals
        return ReferenceSolution(coarse, self.times.copy(),
                                 np.ascontiguousarray(self.states[..., ::stride]),
                                 dict(self.provenance, restricted_to=coarse.n_intervals))

    def every(self, stride: int) -> "ReferenceSolution":
        """Keep every ``stride``-th recorded time, starting at t = 0."""
        return ReferenceSolution(self.grid, self.times[::stride].copy(),
                                 self.states[::stride].copy(), dict(self.provenance))

def reference_provenance(problem: ScalarProblem, n_intervals: int, n_steps: int,
                         record_every: Optional[int], cfg: SchemeConfig) -> Dict[str, Any]:
    return {
        "format_version": REFERENCE_FORMAT_VERSION,
        "problem": problem.describe(),
        "scheme": cfg.weighting.value,
        "epsilon": cfg.epsilon,
        "n_intervals": n_intervals,
        "n_steps": n_steps,
        "record_every": record_every,
    }

def provenance_key(provenance: Dict[str, Any]) -> str:
    text = json.dumps(provenance, sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

def fine_reference(
    problem: ScalarProblem,
    n_intervals: int = REFERENCE_INTERVALS,
    n_steps: Optional[int] = None,
    record_every: Optional[int] = None,
    cache_dir: Optional[Union[str, Path]] = None,
    use_cache: bool = True,
    allow_compute: bool = True,
) -> ReferenceSolution:
    """WENO-Z solution on a fine grid, cached on disk by provenance hash.

    Args:
        problem: Scalar problem
        n_intervals: Fine grid size
        n_steps: Fixed step count; defaults to the family's reference count
        record_every: Also keep every that many steps (plus t = 0)
        cache_dir: Cache root; defaults to ``default_cache_dir()``
        use_cache: Read and write the disk cache
        allow_compute: Compute the reference when it is not cached

    Raises:
        ValueError: If no step count is known for the problem family.
        ReferenceMissing: If it is not cached and computing is not allowed.
        SolverAbort: If the reference run fails.
    """
    if n_steps is None:
        if problem.family not in REFERENCE_STEPS:
            raise ValueError(f"No default reference step count for {problem.family.value}")
        n_steps = REFERENCE_STEPS[problem.family]
    cfg = SchemeConfig(Weighting.Z)
    provenance = reference_provenance(problem, n_intervals, n_steps, record_every, cfg)
    directory = Path(cache_dir or default_cache_dir()) / provenance_key(provenance)
    grid = problem.make_grid(n_intervals)

    if use_cache and (directory / "provenance.json").exists():
        stored = json.loads((directory / "provenance.json").read_text())
        if stored.get("provenance") == provenance:
            logger.debug("Reference cache hit in %s", directory)
            return _load_reference(directory, grid, stored)
        logger.warning("Provenance mismatch in %s, regenerating", directory)
    if not allow_compute:
        raise ReferenceMissing(f"No cached reference for {problem.spec} in {directory}")

    logger.info("Computing reference for %s on %d intervals, %d steps",
                problem.spec, n_intervals, n_steps)
    trajectory = run(problem, cfg, StepPlan.fixed(problem.final_time, n_steps), grid,
                     record_every=record_every)
    reference = ReferenceSolution(grid, np.array(trajectory.times),
                                  np.array(trajectory.states), provenance)
    if use_cache:
        _store_reference(directory, reference)
    return reference

def _store_reference(directory: Path, reference: ReferenceSolution) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    x = reference.grid.nodes(Boundary(reference.provenance["problem"]["boundary"]))
    for k, state in enumerate(reference.states):
        write_snapshot(directory / f"snapshot_{k:05d}.csv", x, {"u": state})
    sidecar = {"provenance": reference.provenance, "times": [float(t) for t in reference.times]}
    (directory / "provenance.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    logger.debug("Stored %d reference snapshots in %s", len(reference.states), directory)

def _load_reference(directory: Path, grid: Grid1D, stored: Dict[str, Any]) -> ReferenceSolution:
    times = np.array(stored["times"], dtype=float)
    states = [read_snapshot(directory / f"snapshot_{k:05d}.csv")[1]["u"]
              for k in range(len(times))]
    return ReferenceSolution(grid, times, np.array(states), stored["provenance"])

# ---------------------------------------------------------------------------
# Exact Riemann solver
# ---------------------------------------------------------------------------

class WaveKind(str, Enum):
    """Nonlinear wave type on one side of the contact."""
    SHOCK = "shock"
    RAREFACTION = "rarefaction"

@dataclass(frozen=True)
class StarState:
    """Solution of the Riemann problem between the two nonlinear waves."""
    p_star: float
    u_star: float
    left_wave: WaveKind
    right_wave: WaveKind
    left: fm.PrimitiveState
    right: fm.PrimitiveState
    gamma: float = fm.GAMMA
    iterations: int = 0

    @property
    def rho_star_left(self) -> float:
        return _star_density(self.left, self.p_star, self.gamma)

    @property
    def rho_star_right(self) -> float:
        return _star_density(self.right, self.p_star, self.gamma)

    def shock_speed(self, side: str) -> float:
        """Speed of the shock on ``side`` ("left" or "right")."""
        state, sign = (self.left, -1.0) if side == "left" else (self.right, 1.0)
        g = self.gamma
        c = state.sound_speed(g)
        ratio = self.p_star / state.p
        return state.u + sign * c * np.sqrt((g + 1.0) / (2.0 * g) * ratio + (g - 1.0) / (2.0 * g))

def _star_density(state: fm.PrimitiveState, p_star: float, gamma: float) -> float:
    ratio = p_star / state.p
    if ratio > 1.0:
        g6 = (gamma - 1.0) / (gamma + 1.0)
        return state.rho * (ratio + g6) / (g6 * ratio + 1.0)
    return state.rho * ratio ** (1.0 / gamma)

def _side_function(p: float, state: fm.PrimitiveState, gamma: float) -> Tuple[float, float]:
    """Pressure function of one side and its derivative."""
    c = state.sound_speed(gamma)
    if p > state.p:
        A = 2.0 / ((gamma + 1.0) * state.rho)
        B = (gamma - 1.0) / (gamma + 1.0) * state.p
        root = np.sqrt(A / (p + B))
        return (p - state.p) * root, root * (1.0 - 0.5 * (p - state.p) / (B + p))
    z = (gamma - 1.0) / (2.0 * gamma)
    ratio = p / state.p
    value = 2.0 * c / (gamma - 1.0) * (ratio ** z - 1.0)
    return value, ratio ** (-(gamma + 1.0) / (2.0 * gamma)) / (state.rho * c)

def pressure_function(p: float, left: fm.PrimitiveState, right: fm.PrimitiveState,
                      gamma: float = fm.GAMMA) -> float:
    return (_side_function(p, left, gamma)[0] + _side_function(p, right, gamma)[0]
            + (right.u - left.u))

def _two_rarefaction_guess(left, right, gamma: float) -> float:
    z = (gamma - 1.0) / (2.0 * gamma)
    c_l, c_r = left.sound_speed(gamma), right.sound_speed(gamma)
    numerator = c_l + c_r - 0.5 * (gamma - 1.0) * (right.u - left.u)
    return (numerator / (c_l / left.p ** z + c_r / right.p ** z)) ** (1.0 / z)

def bisect_star_pressure(left: fm.PrimitiveState, right: fm.PrimitiveState,
                         gamma: float = fm.GAMMA, xtol: float = 1e-14) -> float:
    """Star pressure by bisection on [1e-8, 10 max(p)], widened when needed."""
    lo, hi = 1e-8, 10.0 * max(left.p, right.p)
    f = lambda p: pressure_function(p, left, right, gamma)
    while f(hi) < 0:
        hi *= 2.0
    if f(lo) > 0:
        return lo
    return float(optimize.bisect(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps,
                                 maxiter=500))

def exact_riemann(left: Union[fm.PrimitiveState, Sequence[float]],
                  right: Union[fm.PrimitiveState, Sequence[float]],
                  gamma: float = fm.GAMMA, tol: float = 1e-12,
                  max_iter: int = 100) -> StarState:
    """Star state of the Riemann problem by Newton iteration.

    Starts from the two-rarefaction estimate and falls back to bisection if
    an iterate leaves the positive pressures.

    Raises:
        RiemannSolverError: If the data generate vacuum, are non-physical or
            Newton does not converge.
    """
    left = left if isinstance(left, fm.PrimitiveState) else fm.PrimitiveState(*left)
    right = right if isinstance(right, fm.PrimitiveState) else fm.PrimitiveState(*right)
    for state in (left, right):
        if not (state.rho > 0 and state.p > 0):
            raise RiemannSolverError(f"Non-physical state {state}")
    c_l, c_r = left.sound_speed(gamma), right.sound_speed(gamma)
    if 2.0 / (gamma - 1.0) * (c_l + c_r) <= right.u - left.u:
        raise RiemannSolverError("Initial data generate vacuum")

    p = _two_rarefaction_guess(left, right, gamma)
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        f_l, df_l = _side_function(p, left, gamma)
        f_r, df_r = _side_function(p, right, gamma)
        residual = f_l + f_r + (right.u - left.u)
        if abs(residual) < tol:
            converged = True
            break
        step = residual / (df_l + df_r)
        p_next = p - step
        if not p_next > 0:
            logger.debug("Newton left positive pressures, bisecting")
            p = bisect_star_pressure(left, right, gamma)
            converged = True
            break
        if abs(p_next - p) <= 4.0 * np.finfo(float).eps * p:
            p = p_next
            converged = True
            break
        p = p_next
    if not converged:
        raise RiemannSolverError(f"Star pressure did not converge in {max_iter} iterations")

    f_l = _side_function(p, left, gamma)[0]
    f_r = _side_function(p, right, gamma)[0]
    u_star = 0.5 * (left.u + right.u) + 0.5 * (f_r - f_l)
    return StarState(
        p_star=float(p), u_star=float(u_star),
        left_wave=WaveKind.SHOCK if p > left.p else WaveKind.RAREFACTION,
        right_wave=WaveKind.SHOCK if p > right.p else WaveKind.RAREFACTION,
        left=left, right=right, gamma=gamma, iterations=iterations)

def sample_riemann(star: StarState, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(rho, u, p) at similarity coordinates xi = (x - x0) / t."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    rho = np.empty_like(xi)
    u = np.empty_like(xi)
    p = np.empty_like(xi)
    for k, s in enumerate(xi):
        rho[k], u[k], p[k] = _sample_point(star, float(s))
    return rho, u, p

def _sample_point(star: StarState, s: float) -> Tuple[float, float, float]:
    g = star.gamma
    if s <= star.u_star:
        state, sign, wave, rho_star = star.left, 1.0, star.left_wave, star.rho_star_left
    else:
        state, sign, wave, rho_star = star.right, -1.0, star.right_wave, star.rho_star_right
    # sign = +1 on the left; the right side is the mirror image
    c = state.sound_speed(g)
    if wave is WaveKind.SHOCK:
        shock = star.shock_speed("left" if sign > 0 else "right")
        outside = s < shock if sign > 0 else s > shock
        if outside:
            return state.as_tuple()
        return rho_star, star.u_star, star.p_star
    c_star = c * (star.p_star / state.p) ** ((g - 1.0) / (2.0 * g))
    head = state.u - sign * c
    tail = star.u_star - sign * c_star
    if (s <= head) if sign > 0 else (s >= head):
        return state.as_tuple()
    if (s > tail) if sign > 0 else (s < tail):
        return rho_star, star.u_star, star.p_star
    fan_u = 2.0 / (g + 1.0) * (sign * c + 0.5 * (g - 1.0) * state.u + s)
    fan_c = 2.0 / (g + 1.0) * (c + sign * 0.5 * (g - 1.0) * (state.u - s))
    fan_rho = state.rho * (fan_c / c) ** (2.0 / (g - 1.0))
    fan_p = state.p * (fan_c / c) ** (2.0 * g / (g - 1.0))
    return fan_rho, fan_u, fan_p

def exact_solution(problem: EulerProblem, x: np.ndarray, t: float,
                   star: Optional[StarState] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact (rho, u, p) of a shock tube at time t on nodes x."""
    if t <= 0:
        return problem.initial_primitive(np.asarray(x, dtype=float))
    star = star or exact_riemann(problem.left, problem.right, problem.gamma)
    return sample_riemann(star, (np.asarray(x, dtype=float) - problem.x_interface) / t)

def exact_reference(problem: EulerProblem, grid: Grid1D,
                    times: Sequence[float]) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Exact primitive states on the grid nodes at each time."""
    star = exact_riemann(problem.left, problem.right, problem.gamma)
    x = grid.nodes(problem.boundary)
    return [exact_solution(problem, x, t, star) for t in times]
