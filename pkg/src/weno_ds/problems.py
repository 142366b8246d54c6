"""Benchmark problems and the problem-spec mini-language.

A spec string is ``family[:key=value,...]``, for example ``transport``,
``burgers:ic=gauss,z=14.94``, ``bl:a=0.25``, ``euler:preset=sod-mod`` or
``euler:rhol=1,ul=0,pl=1,rhor=0.125,ur=0,pr=0.1``.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from . import flux_models as fm
from .errors import ProblemSpecError
from .mesh import Boundary, Grid1D, make_grid

logger = logging.getLogger(__name__)

class ProblemFamily(str, Enum):
    """Physical system a problem belongs to."""
    TRANSPORT = "transport"
    BURGERS = "burgers"
    BUCKLEY_LEVERETT = "bl"
    EULER = "euler"

class BurgersIC(str, Enum):
    """Burgers initial-condition families."""
    STEP = "step"
    GAUSS = "gauss"
    SINE = "sine"

BURGERS_Z_RANGES = {
    BurgersIC.STEP: (1.0, 2.0),
    BurgersIC.GAUSS: (10.0, 30.0),
    BurgersIC.SINE: (1.0, 2.0),
}
BL_A_RANGE = (0.05, 0.95)

@dataclass
class ScalarProblem:
    """Scalar conservation law u_t + f(u)_x = 0 on a periodic interval."""
    family: ProblemFamily
    params: Dict[str, Union[float, str]]
    flux: Callable
    dflux: Callable
    initial_condition: Callable[[np.ndarray], np.ndarray]
    x_min: float
    x_max: float
    final_time: float
    boundary: Boundary = Boundary.PERIODIC
    bounds: Optional[Tuple[float, float]] = None

    def make_grid(self, n_intervals: int) -> Grid1D:
        return make_grid(self.x_min, self.x_max, n_intervals)

    def initial_values(self, grid: Grid1D) -> np.ndarray:
        return np.asarray(self.initial_condition(grid.nodes(self.boundary)), dtype=float)

    def wave_speed(self, u) -> float:
        """Global LF speed max |f'(u)| for the current field."""
        if self.family is ProblemFamily.BUCKLEY_LEVERETT:
            return fm.bl_wave_speed(u, float(self.params["a"]))
        return fm.max_abs_wave_speed(self.dflux, u)

    @property
    def spec(self) -> str:
        if not self.params:
            return self.family.value
        args = ",".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.family.value}:{args}"

    def describe(self) -> Dict[str, object]:
        return {"family": self.family.value, "params": dict(self.params),
                "x_min": self.x_min, "x_max": self.x_max,
                "final_time": self.final_time, "boundary": self.boundary.value}

@dataclass
class EulerProblem:
    """Shock tube: two constant states separated at ``x_interface``."""
    left: fm.PrimitiveState
    right: fm.PrimitiveState
    name: str = "riemann"
    x_min: float = 0.0
    x_max: float = 1.0
    x_interface: float = 0.5
    final_time: float = 0.1
    gamma: float = fm.GAMMA
    boundary: Boundary = Boundary.ZERO_GRADIENT
    family: ProblemFamily = field(default=ProblemFamily.EULER, init=False)

    def __post_init__(self) -> None:
        for side, state in (("left", self.left), ("right", self.right)):
            if not (state.rho > 0 and state.p > 0):
                raise ProblemSpecError(f"{side} state must have positive density and "
                                       f"pressure, got {state}")

    def make_grid(self, n_intervals: int) -> Grid1D:
        return make_grid(self.x_min, self.x_max, n_intervals)

    def initial_primitive(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        is_left = x <= self.x_interface
        return tuple(np.where(is_left, l, r)
                     for l, r in zip(self.left.as_tuple(), self.right.as_tuple()))

    def initial_values(self, grid: Grid1D) -> np.ndarray:
        return fm.conserved_from_primitive(*self.initial_primitive(grid.nodes(self.boundary)),
                                           gamma=self.gamma)

    def max_signal(self, state) -> float:
        return fm.euler_max_signal(state, self.gamma)

    @property
    def spec(self) -> str:
        if self.name in EULER_PRESETS:
            return f"euler:preset={self.name}"
        l, r = self.left, self.right
        return (f"euler:rhol={l.rho},ul={l.u},pl={l.p},"
                f"rhor={r.rho},ur={r.u},pr={r.p}")

    def describe(self) -> Dict[str, object]:
        return {"family": "euler", "name": self.name,
                "left": list(self.left.as_tuple()), "right": list(self.right.as_tuple()),
                "x_min": self.x_min, "x_max": self.x_max, "x_interface": self.x_interface,
                "final_time": self.final_time, "gamma": self.gamma,
                "boundary": self.boundary.value}

Problem = Union[ScalarProblem, EulerProblem]

def transport_problem(final_time: float = 0.5) -> ScalarProblem:
    """u_t + u_x = 0 with u(x, 0) = sin(pi x) on [0, 2]."""
    return ScalarProblem(ProblemFamily.TRANSPORT, {}, fm.transport_flux, fm.transport_dflux,
                         lambda x: np.sin(np.pi * x), 0.0, 2.0, final_time)

def burgers_problem(ic: Union[BurgersIC, str] = BurgersIC.STEP, z: float = 1.5,
                    final_time: float = 0.3) -> ScalarProblem:
    ic = BurgersIC(ic)
    if ic is BurgersIC.STEP:
        initial = lambda x: np.where((x >= 1.0) & (x <= 2.0), z, 0.0)
    elif ic is BurgersIC.GAUSS:
        initial = lambda x: np.exp(-z * (x - 1.0) ** 2)
    else:
        initial = lambda x: z * np.sin(np.pi * x)
    return ScalarProblem(ProblemFamily.BURGERS, {"ic": ic.value, "z": float(z)},
                         fm.burgers_flux, fm.burgers_dflux, initial, 0.0, 2.0, final_time)

def buckley_leverett_problem(a: float = 0.5, final_time: float = 0.4) -> ScalarProblem:
    if not 0.0 < a < 1.0:
        raise ProblemSpecError(f"Buckley-Leverett parameter must lie in (0, 1), got {a}")
    return ScalarProblem(ProblemFamily.BUCKLEY_LEVERETT, {"a": float(a)},
                         lambda u: fm.bl_flux(u, a), lambda u: fm.bl_dflux(u, a),
                         lambda x: np.where((x >= -0.5) & (x <= 0.0), 1.0, 0.0),
                         -1.0, 1.0, final_time, bounds=(0.0, 1.0))

EULER_PRESETS: Dict[str, Tuple[Tuple[float, float, float], Tuple[float, float, float]]] = {
    "sod": ((1.0, 0.0, 1.0), (0.125, 0.0, 0.1)),
    "sod-mod": ((1.0, 0.75, 1.0), (0.125, 0.0, 0.1)),
    "lax": ((0.445, 0.698, 3.528), (0.5, 0.0, 0.571)),
}

def euler_problem(preset: str = "sod", final_time: float = 0.1) -> EulerProblem:
    if preset not in EULER_PRESETS:
        raise ProblemSpecError(f"Unknown Euler preset '{preset}', choose from "
                               f"{', '.join(EULER_PRESETS)}")
    left, right = EULER_PRESETS[preset]
    return EulerProblem(fm.PrimitiveState(*left), fm.PrimitiveState(*right),
                        name=preset, final_time=final_time)

def riemann_problem(left: Tuple[float, float, float], right: Tuple[float, float, float],
                    final_time: float = 0.1) -> EulerProblem:
    return EulerProblem(fm.PrimitiveState(*left), fm.PrimitiveState(*right),
                        final_time=final_time)

def _parse_args(text: str, spec: str) -> Dict[str, str]:
    args: Dict[str, str] = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        if "=" not in item:
            raise ProblemSpecError(f"Expected key=value in '{spec}', got '{item}'")
        key, value = (s.strip() for s in item.split("=", 1))
        args[key] = value
    return args

def _take_float(args: Dict[str, str], key: str, spec: str, default: Optional[float] = None) -> float:
    if key not in args:
        if default is None:
            raise ProblemSpecError(f"'{spec}' is missing '{key}'")
        return default
    try:
        return float(args.pop(key))
    except ValueError as e:
        raise ProblemSpecError(f"'{key}' in '{spec}' is not a number") from e

def parse_problem(spec: str, final_time: Optional[float] = None) -> Problem:
    """Build a problem from its spec string.

    Args:
        spec: Problem spec, see the module docstring
        final_time: Optional override of the family's default end time

    Raises:
        ProblemSpecError: If the spec cannot be parsed.
    """
    family_text, _, arg_text = spec.strip().partition(":")
    try:
        family = ProblemFamily(family_text.strip().lower())
    except ValueError as e:
        raise ProblemSpecError(f"Unknown problem family in '{spec}'") from e
    args = _parse_args(arg_text, spec)
    if "t" in args:
        final_time = _take_float(args, "t", spec)
    extra: Dict[str, float] = {} if final_time is None else {"final_time": final_time}

    if family is ProblemFamily.TRANSPORT:
        problem: Problem = transport_problem(**extra)
    elif family is ProblemFamily.BURGERS:
        try:
            ic = BurgersIC(args.pop("ic", BurgersIC.STEP.value))
        except ValueError as e:
            raise ProblemSpecError(f"Unknown Burgers initial condition in '{spec}'") from e
        problem = burgers_problem(ic, _take_float(args, "z", spec, 1.5), **extra)
    elif family is ProblemFamily.BUCKLEY_LEVERETT:
        problem = buckley_leverett_problem(_take_float(args, "a", spec, 0.5), **extra)
    elif "preset" in args:
        problem = euler_problem(args.pop("preset"), **extra)
    else:
        left = tuple(_take_float(args, key, spec) for key in ("rhol", "ul", "pl"))
        right = tuple(_take_float(args, key, spec) for key in ("rhor", "ur", "pr"))
        problem = riemann_problem(left, right, **extra)

    if args:
        raise ProblemSpecError(f"Unknown keys {sorted(args)} in '{spec}'")
    return problem

PROBLEM_SETS: Dict[str, List[str]] = {
    "bl-test": [f"bl:a={a}" for a in (0.25, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)],
    "burgers-test": ([f"burgers:ic=step,z={z}" for z in (1.19, 1.53, 1.84)]
                     + [f"burgers:ic=gauss,z={z}" for z in (14.94, 21.65, 29.08)]
                     + [f"burgers:ic=sine,z={z}" for z in (1.46, 1.6, 1.9)]),
    "burgers-extrapolation": ([f"burgers:ic=step,z={z}" for z in (0.71, 2.41, 2.57, 3.13)]
                              + [f"burgers:ic=gauss,z={z}" for z in (33.9, 34.67)]
                              + [f"burgers:ic=sine,z={z}" for z in (0.94, 2.12, 2.44)]),
    "euler-test": ["euler:preset=sod-mod", "euler:preset=lax"],
}

def expand_problem_set(name_or_specs: Union[str, List[str]]) -> List[str]:
    """Resolve a named set, or split a ';'-separated list of spec strings."""
    if isinstance(name_or_specs, list):
        return list(name_or_specs)
    if name_or_specs in PROBLEM_SETS:
        return list(PROBLEM_SETS[name_or_specs])
    specs = [s.strip() for s in name_or_specs.split(";") if s.strip()]
    if not specs:
        raise ProblemSpecError("Empty problem set")
    for spec in specs:
        parse_problem(spec)
    return specs
