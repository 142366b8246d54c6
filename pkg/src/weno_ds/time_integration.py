"""Third-order TVD Runge-Kutta stepping with fixed or CFL-adaptive plans."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .deep_smoothness import MultiplierSource
from .errors import NonPhysicalState, SolverAbort
from .mesh import Grid1D
from .problems import EulerProblem, Problem
from .semidiscrete import semidiscrete_rhs
from .weno_kernel import SchemeConfig

logger = logging.getLogger(__name__)

DEFAULT_CFL = 0.9

class StepMode(str, Enum):
    """How the time step is chosen."""
    FIXED_COUNT = "fixed"
    ADAPTIVE_CFL = "cfl"

@dataclass(frozen=True)
class StepPlan:
    """Time stepping plan up to ``final_time``.

    Attributes:
        final_time: End time T
        mode: Fixed step count or adaptive CFL steps
        n_steps: Number of equal steps (fixed mode)
        cfl: Courant number (adaptive mode)
    """
    final_time: float
    mode: StepMode = StepMode.FIXED_COUNT
    n_steps: Optional[int] = None
    cfl: float = DEFAULT_CFL

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", StepMode(self.mode))
        if not self.final_time > 0:
            raise ValueError(f"Final time must be positive, got {self.final_time}")
        if self.mode is StepMode.FIXED_COUNT:
            if self.n_steps is None or self.n_steps < 1:
                raise ValueError(f"Fixed plans need n_steps >= 1, got {self.n_steps}")
        elif not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"CFL number must lie in (0, 1], got {self.cfl}")

    @classmethod
    def fixed(cls, final_time: float, n_steps: int) -> "StepPlan":
        return cls(final_time=final_time, mode=StepMode.FIXED_COUNT, n_steps=int(n_steps))

    @classmethod
    def adaptive(cls, final_time: float, cfl: float = DEFAULT_CFL) -> "StepPlan":
        return cls(final_time=final_time, mode=StepMode.ADAPTIVE_CFL, cfl=cfl)

    @property
    def dt(self) -> float:
        if self.mode is not StepMode.FIXED_COUNT:
            raise ValueError("Adaptive plans have no constant step")
        return self.final_time / self.n_steps

def _check_stage(stage, step: Optional[int]) -> None:
    if not np.all(np.isfinite(ad.value_of(stage))):
        raise SolverAbort("Non-finite Runge-Kutta stage", step=step)

def rk3_step(u, dt: float, rhs: Callable, step: Optional[int] = None):
    """One TVD RK3 step; ``u`` may be an array or a tape Variable.

    Raises:
        ValueError: If dt is not positive.
        SolverAbort: If a stage becomes non-finite.
    """
    if not dt > 0:
        raise ValueError(f"Time step must be positive, got {dt}")
    u1 = u + dt * rhs(u)
    _check_stage(u1, step)
    u2 = 0.75 * u + 0.25 * u1 + 0.25 * dt * rhs(u1)
    _check_stage(u2, step)
    u3 = (1.0 / 3.0) * u + (2.0 / 3.0) * u2 + (2.0 / 3.0) * dt * rhs(u2)
    _check_stage(u3, step)
    return u3

@dataclass
class Trajectory:
    """Recorded states of a run; the last entry is the state at T."""
    grid: Grid1D
    times: List[float] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)
    n_steps: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return self.times[-1]

    def record(self, t: float, state: np.ndarray) -> None:
        self.times.append(float(t))
        self.states.append(np.array(state, copy=True))

def adaptive_dt(problem: EulerProblem, state: np.ndarray, dx: float, cfl: float) -> float:
    return cfl * dx / problem.max_signal(state)

def run(
    problem: Problem,
    cfg: SchemeConfig,
    plan: StepPlan,
    grid: Grid1D,
    multipliers: Optional[MultiplierSource] = None,
    record_every: Optional[int] = None,
    snapshot_times: Sequence[float] = (),
    initial: Optional[np.ndarray] = None,
) -> Trajectory:
    """Integrate ``problem`` from its initial data to ``plan.final_time``.

    Args:
        problem: Scalar or Euler problem
        cfg: Scheme selection
        plan: Fixed or adaptive stepping
        grid: Spatial grid
        multipliers: Multiplier source for WENO-DS
        record_every: Record the state every that many steps (plus t = 0)
        snapshot_times: Extra times to record; adaptive steps are clipped to
            land on them, fixed plans record the nearest step
        initial: Start from this state instead of the problem's initial data

    Returns:
        Trajectory whose last state is the solution at T.

    Raises:
        SolverAbort: On a non-finite state, with the step index.
        NonPhysicalState: On an Euler positivity violation, with the location.
    """
    state = problem.initial_values(grid) if initial is None else np.array(initial, dtype=float)
    euler = isinstance(problem, EulerProblem)
    T = plan.final_time
    dx = grid.dx
    rhs = lambda v: semidiscrete_rhs(v, problem, dx, cfg, multipliers)

    trajectory = Trajectory(grid=grid)
    if record_every or snapshot_times:
        trajectory.record(0.0, state)
    stops = sorted(t for t in snapshot_times if 0.0 < t < T)

    if plan.mode is StepMode.FIXED_COUNT:
        dt = plan.dt
        snapshot_steps = {max(1, int(round(t / dt))) for t in stops}
        for n in range(plan.n_steps):
            state = _advance(state, dt, rhs, problem, n, euler)
            done = n + 1
            t = T if done == plan.n_steps else done * dt
            if done < plan.n_steps and ((record_every and done % record_every == 0)
                                        or done in snapshot_steps):
                trajectory.record(t, state)
        trajectory.n_steps = plan.n_steps
    else:
        if not euler:
            raise ValueError("Adaptive CFL stepping is only defined for the Euler system")
        t, n = 0.0, 0
        while T - t > 1e-14 * T:
            target = stops[0] if stops else T
            dt = adaptive_dt(problem, state, dx, plan.cfl)
            landing = t + dt >= target
            if landing:
                dt = target - t
            state = _advance(state, dt, rhs, problem, n, euler)
            n += 1
            t = target if landing else t + dt
            if landing and stops:
                stops.pop(0)
                trajectory.record(t, state)
            elif record_every and n % record_every == 0 and T - t > 1e-14 * T:
                trajectory.record(t, state)
        trajectory.n_steps = n

    trajectory.record(T, state)
    logger.debug("Finished %s in %d steps", getattr(problem, "spec", problem), trajectory.n_steps)
    return trajectory

def _advance(state, dt, rhs, problem, step: int, euler: bool) -> np.ndarray:
    try:
        state = rk3_step(state, dt, rhs, step=step)
        if euler:
            problem.max_signal(state)
    except NonPhysicalState as e:
        if e.step is not None:
            raise
        raise NonPhysicalState("Euler state lost positivity", location=e.location,
                               quantity=e.quantity, step=step) from e
    return state
