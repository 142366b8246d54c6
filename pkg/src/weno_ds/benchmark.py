"""Error norms, scheme comparison reports and convergence studies."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import flux_models as fm
from .deep_smoothness import ConstantMultiplier, MultiplierSource, load_params
from .errors import ModelFileError
from .mesh import Grid1D
from .problems import EulerProblem, Problem, ScalarProblem, parse_problem, transport_problem
from .reference_oracles import REFERENCE_STEPS, exact_solution, fine_reference
from .time_integration import StepPlan, run
from .weno_kernel import SchemeConfig, Weighting

logger = logging.getLogger(__name__)

SCHEME_ORDER = (Weighting.JS, Weighting.Z, Weighting.DS)

# Default coarse step counts at 128 intervals, used by compare
COMPARE_STEPS = {"bl": 140, "burgers": 100, "transport": 100}

class L2Convention(str, Enum):
    """How the tabulated L2 error is normalized."""
    RMS = "rms"
    DX = "dx"

def error_norms(u: np.ndarray, reference: np.ndarray, dx: float,
                convention: L2Convention = L2Convention.RMS) -> Tuple[float, float]:
    """(L-infinity, L2) norms of u - reference.

    RMS gives sqrt(sum e^2 / n) over the stored points, DX gives
    sqrt(dx * sum e^2).
    """
    error = np.asarray(u, dtype=float) - np.asarray(reference, dtype=float)
    linf = float(np.max(np.abs(error)))
    total = float(np.sum(error * error))
    if L2Convention(convention) is L2Convention.DX:
        return linf, math.sqrt(dx * total)
    return linf, math.sqrt(total / error.size)

@dataclass
class ErrorRow:
    """Errors of every scheme on one problem (or one Euler component)."""
    label: str
    linf: Dict[str, float] = field(default_factory=dict)
    l2: Dict[str, float] = field(default_factory=dict)

    @staticmethod
    def _ratio(errors: Dict[str, float]) -> Optional[float]:
        ds = errors.get(Weighting.DS.value)
        baselines = [errors[k] for k in (Weighting.JS.value, Weighting.Z.value) if k in errors]
        if ds is None or not baselines or not ds > 0:
            return None
        return min(baselines) / ds

    @property
    def ratio_linf(self) -> Optional[float]:
        return self._ratio(self.linf)

    @property
    def ratio_l2(self) -> Optional[float]:
        return self._ratio(self.l2)

@dataclass
class ErrorReport:
    """Per-scheme errors for a problem set."""
    schemes: List[str]
    rows: List[ErrorRow]
    convention: L2Convention = L2Convention.RMS
    provenance: Dict[str, Any] = field(default_factory=dict)

    def header(self) -> List[str]:
        columns = ["problem"] + [f"linf_{s}" for s in self.schemes]
        if Weighting.DS.value in self.schemes:
            columns.append("ratio_linf")
        columns += [f"l2_{s}" for s in self.schemes]
        if Weighting.DS.value in self.schemes:
            columns.append("ratio_l2")
        return columns

    def table_rows(self) -> List[List[str]]:
        has_ds = Weighting.DS.value in self.schemes
        rows = []
        for row in self.rows:
            cells = [row.label] + [f"{row.linf[s]:.6f}" for s in self.schemes]
            if has_ds:
                cells.append(_format_ratio(row.ratio_linf))
            cells += [f"{row.l2[s]:.6f}" for s in self.schemes]
            if has_ds:
                cells.append(_format_ratio(row.ratio_l2))
            rows.append(cells)
        return rows

    def to_text(self) -> str:
        return format_table(self.header(), self.table_rows())

    def to_csv_rows(self) -> List[List[str]]:
        return [self.header()] + self.table_rows()

    def to_dict(self) -> Dict[str, Any]:
        return {"schemes": self.schemes, "l2_convention": self.convention.value,
                "rows": [dict(asdict(r), ratio_linf=r.ratio_linf, ratio_l2=r.ratio_l2)
                         for r in self.rows],
                "provenance": self.provenance}

def _format_ratio(ratio: Optional[float]) -> str:
    return "-" if ratio is None else f"{ratio:.2f}"

def format_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Right-aligned text table with a rule under the header."""
    widths = [max(len(str(cell)) for cell in column) for column in zip(header, *rows)]
    lines = ["  ".join(str(cell).rjust(w) for cell, w in zip(line, widths))
             for line in [list(header)] + [list(r) for r in rows]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)

@dataclass
class ConvergenceRow:
    n: int
    linf: float
    order: Optional[float] = None

@dataclass
class ConvergenceTable:
    """L-infinity errors under refinement with observed orders."""
    label: str
    rows: List[ConvergenceRow]

    @classmethod
    def from_errors(cls, label: str, ns: Sequence[int], errors: Sequence[float]) -> "ConvergenceTable":
        rows = []
        for k, (n, error) in enumerate(zip(ns, errors)):
            order = None
            if k > 0 and error > 0 and errors[k - 1] > 0:
                order = math.log(errors[k - 1] / error) / math.log(n / ns[k - 1])
            rows.append(ConvergenceRow(int(n), float(error), order))
        return cls(label, rows)

    def orders(self) -> List[Optional[float]]:
        return [row.order for row in self.rows]

    def to_text(self) -> str:
        rows = [[str(r.n), f"{r.linf:.6e}", "-" if r.order is None else f"{r.order:.6f}"]
                for r in self.rows]
        return format_table(["N", f"linf_{self.label}", "order"], rows)

    def to_dict(self) -> Dict[str, Any]:
        return {"label": self.label, "rows": [asdict(r) for r in self.rows]}

def convergence_study(error_for_n: Callable[[int], float], ns: Sequence[int],
                      label: str = "") -> ConvergenceTable:
    """Evaluate ``error_for_n`` on each grid size and tabulate observed orders."""
    errors = []
    for n in ns:
        errors.append(float(error_for_n(int(n))))
        logger.debug("N=%d error %.6e", n, errors[-1])
    return ConvergenceTable.from_errors(label, list(ns), errors)

def convergence_dt(dx: float) -> float:
    return 0.4 * dx ** (5.0 / 3.0)

def transport_error(n: int, cfg: SchemeConfig, multipliers: Optional[MultiplierSource] = None,
                    final_time: float = 0.5) -> float:
    """L-infinity error of sin(pi x) transport at T with dt = 0.4 dx^(5/3)."""
    problem = transport_problem(final_time)
    grid = problem.make_grid(n)
    n_steps = int(math.ceil(final_time / convergence_dt(grid.dx)))
    final = run(problem, cfg, StepPlan.fixed(final_time, n_steps), grid, multipliers).final
    x = grid.nodes(problem.boundary)
    exact = np.sin(np.pi * (x - final_time))
    return float(np.max(np.abs(final - exact)))

# ---------------------------------------------------------------------------
# Scheme comparison
# ---------------------------------------------------------------------------

@dataclass
class CompareOptions:
    """Options for ``compare``.

    Attributes:
        n_intervals: Coarse grid size
        n_steps: Coarse step count for scalar problems (None: family default,
            scaled with the grid)
        cfl: Courant number for Euler problems
        schemes: Schemes to run
        model_path: Trained model for the DS rows
        constant_multiplier: Inject this multiplier instead of a model
        convention: L2 normalization
        workers: Worker processes (1 runs in-process)
        cache_dir: Reference cache directory
        compute_references: Compute missing fine references instead of failing
    """
    n_intervals: int = 128
    n_steps: Optional[int] = None
    cfl: float = 0.9
    schemes: Tuple[str, ...] = tuple(s.value for s in SCHEME_ORDER)
    model_path: Optional[Path] = None
    constant_multiplier: Optional[float] = None
    convention: L2Convention = L2Convention.RMS
    workers: int = 1
    cache_dir: Optional[Path] = None
    compute_references: bool = True

def default_steps(problem: ScalarProblem, n_intervals: int) -> int:
    base = COMPARE_STEPS[problem.family.value]
    return max(1, int(round(base * n_intervals / 128)))

def _multipliers(options: CompareOptions) -> Tuple[Optional[MultiplierSource], float]:
    if options.constant_multiplier is not None:
        return ConstantMultiplier(options.constant_multiplier), SchemeConfig().C
    if options.model_path is None:
        return None, SchemeConfig().C
    model = load_params(options.model_path)
    return model, model.C

def solve_problem(problem: Problem, scheme: str, n_intervals: int, n_steps: Optional[int],
                  cfl: float, multipliers: Optional[MultiplierSource], C: float):
    """Final state of one scheme on one problem, with the grid used."""
    grid = problem.make_grid(n_intervals)
    if isinstance(problem, EulerProblem):
        plan = StepPlan.adaptive(problem.final_time, cfl)
    else:
        plan = StepPlan.fixed(problem.final_time, n_steps or default_steps(problem, n_intervals))
    cfg = SchemeConfig(Weighting(scheme), C=C)
    source = multipliers if cfg.weighting is Weighting.DS else None
    return run(problem, cfg, plan, grid, source).final, grid

def reference_for(problem: Problem, grid: Grid1D, cache_dir: Optional[Path] = None,
                  allow_compute: bool = True) -> List[np.ndarray]:
    """Reference at T: exact primitives for Euler, restricted fine WENO-Z otherwise."""
    if isinstance(problem, EulerProblem):
        return list(exact_solution(problem, grid.nodes(problem.boundary), problem.final_time))
    if problem.family.value not in ("bl", "burgers"):
        x = grid.nodes(problem.boundary)
        return [np.sin(np.pi * (x - problem.final_time))]
    fine = fine_reference(problem, n_steps=REFERENCE_STEPS[problem.family], cache_dir=cache_dir,
                          allow_compute=allow_compute)
    return [fine.restrict(grid).final]

def _compare_one(job: Tuple[str, CompareOptions]) -> List[ErrorRow]:
    spec, options = job
    problem = parse_problem(spec)
    multipliers, C = _multipliers(options)
    grid = problem.make_grid(options.n_intervals)
    reference = reference_for(problem, grid, options.cache_dir, options.compute_references)
    if isinstance(problem, EulerProblem):
        rows = [ErrorRow(f"{spec} {name}") for name in ("rho", "u", "p")]
    else:
        rows = [ErrorRow(spec)]
    for scheme in options.schemes:
        if scheme == Weighting.DS.value and multipliers is None:
            raise ModelFileError("WENO-DS rows need a model file or a constant multiplier")
        final, grid = solve_problem(problem, scheme, options.n_intervals, options.n_steps,
                                    options.cfl, multipliers, C)
        values = (fm.primitive_from_conserved(final, problem.gamma)
                  if isinstance(problem, EulerProblem) else [final])
        for row, q, ref in zip(rows, values, reference):
            row.linf[scheme], row.l2[scheme] = error_norms(q, ref, grid.dx, options.convention)
    return rows

def compare(specs: Sequence[str], options: CompareOptions) -> ErrorReport:
    """Run every scheme on every problem and collect errors at T.

    Runs fan out over ``options.workers`` processes; rows keep the input order.
    """
    jobs = [(spec, options) for spec in specs]
    if options.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=options.workers) as pool:
            results = list(pool.map(_compare_one, jobs))
    else:
        results = [_compare_one(job) for job in jobs]
    rows = [row for result in results for row in result]
    provenance = {"n_intervals": options.n_intervals, "n_steps": options.n_steps,
                  "cfl": options.cfl, "model": str(options.model_path) if options.model_path else None,
                  "constant_multiplier": options.constant_multiplier, "problems": list(specs)}
    return ErrorReport(list(options.schemes), rows, L2Convention(options.convention), provenance)
