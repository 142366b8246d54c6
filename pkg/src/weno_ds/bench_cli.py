"""Command-line front end for the WENO-DS solver framework.

Subcommands:
    solve        Run one scheme on one problem and write CSV snapshots
    compare      Error table of JS / Z / DS on a problem set
    convergence  Observed order on the smooth transport problem
    train        Train the smoothness network with a named protocol
    gen-dataset  Write a manifest of sampled training problems
    riemann      Exact shock tube solution as CSV
"""

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import flux_models as fm
from .benchmark import (
    CompareOptions,
    L2Convention,
    compare,
    convergence_study,
    default_steps,
    transport_error,
)
from .deep_smoothness import ConstantMultiplier, MultiplierSource, load_params
from .errors import ModelFileError, ProblemSpecError, ReferenceMissing, RiemannSolverError, SolverAbort
from .mesh import MIN_INTERVALS, write_snapshot
from .problems import EulerProblem, Problem, expand_problem_set, parse_problem
from .reference_oracles import CACHE_ENV_VAR, exact_riemann, exact_solution
from .time_integration import DEFAULT_CFL, StepPlan, run
from .training import TRAINING_PROTOCOLS, TrainingOptions, generate_dataset, train
from .weno_kernel import SchemeConfig, Weighting

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BAD_SPEC = 2
EXIT_SOLVER_ABORT = 3
EXIT_BAD_MODEL = 4
EXIT_NO_REFERENCE = 5
EXIT_INTERRUPTED = 130

DEFAULT_CONVERGENCE_NS = "20,40,80,160,320,640"


def get_cache_dir(cache_dir: Optional[str] = None) -> Optional[Path]:
    """Reference cache directory from the flag, else the environment.

    Returns None when neither is set so the library default applies.
    """
    value = cache_dir or os.environ.get(CACHE_ENV_VAR)
    return Path(value) if value else None


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ProblemSpecError(f"Expected a comma-separated list of numbers, got '{text}'") from e


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ProblemSpecError(f"Expected a comma-separated list of integers, got '{text}'") from e


def _grid_size(text: str) -> int:
    """argparse type for interval counts."""
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid int value: '{text}'") from None
    if n < MIN_INTERVALS:
        raise argparse.ArgumentTypeError(f"need at least {MIN_INTERVALS} intervals, got {n}")
    return n


def _multiplier_source(model: Optional[str], delta: Optional[float]):
    """(multipliers, C) for DS runs from --delta or --model."""
    if delta is not None:
        return ConstantMultiplier(delta), SchemeConfig().C
    if model is None:
        return None, SchemeConfig().C
    loaded = load_params(model)
    return loaded, loaded.C


def _solution_columns(problem: Problem, state: np.ndarray) -> Dict[str, np.ndarray]:
    if isinstance(problem, EulerProblem):
        rho, u, p = fm.primitive_from_conserved(state, problem.gamma)
        return {"rho": rho, "u": u, "p": p}
    return {"u": state}


def _snapshot_path(out: Path, t: float) -> Path:
    return out.with_name(f"{out.stem}_t{t:g}{out.suffix or '.csv'}")


def cmd_solve(args) -> int:
    problem = parse_problem(args.problem, args.tfinal)
    scheme = Weighting(args.scheme)
    multipliers, C = _multiplier_source(args.model, args.delta)
    if scheme is Weighting.DS and multipliers is None:
        raise ModelFileError("WENO-DS needs --model or --delta")
    euler = isinstance(problem, EulerProblem)
    n_intervals = args.nx or (64 if euler else 128)
    grid = problem.make_grid(n_intervals)

    if args.nt is not None:
        plan = StepPlan.fixed(problem.final_time, args.nt)
    elif euler:
        plan = StepPlan.adaptive(problem.final_time, args.cfl)
    else:
        plan = StepPlan.fixed(problem.final_time, default_steps(problem, n_intervals))

    snapshot_times = _float_list(args.snapshots) if args.snapshots else []
    cfg = SchemeConfig(scheme, C=C)
    print(f"Solving {problem.spec} with WENO-{scheme.value.upper()} on N={n_intervals}")
    trajectory = run(problem, cfg, plan, grid, multipliers if scheme is Weighting.DS else None,
                     snapshot_times=snapshot_times)

    x = grid.nodes(problem.boundary)
    out = Path(args.out)
    write_snapshot(out, x, _solution_columns(problem, trajectory.final))
    print(f"✅ {trajectory.n_steps} steps, T={trajectory.final_time:g}, wrote {out}")
    times = np.asarray(trajectory.times)
    for t in snapshot_times:
        k = int(np.argmin(np.abs(times - t)))
        path = write_snapshot(_snapshot_path(out, t), x,
                              _solution_columns(problem, trajectory.states[k]))
        print(f"   snapshot t={times[k]:g} -> {path}")
    return EXIT_OK


def _write_rows(path: Path, rows: Sequence[Sequence[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        csv.writer(handle).writerows(rows)


def _write_json(path: Path, document) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")


def cmd_compare(args) -> int:
    specs = expand_problem_set(args.problems)
    problems = [parse_problem(spec) for spec in specs]
    n_intervals = args.nx or (64 if all(isinstance(p, EulerProblem) for p in problems) else 128)
    schemes = args.scheme or [Weighting.JS.value, Weighting.Z.value]
    if not args.scheme and (args.model or args.delta is not None):
        schemes.append(Weighting.DS.value)
    if Weighting.DS.value in schemes and args.model is None and args.delta is None:
        raise ModelFileError("WENO-DS rows need --model or --delta")

    options = CompareOptions(
        n_intervals=n_intervals,
        n_steps=args.nt,
        cfl=args.cfl,
        schemes=tuple(dict.fromkeys(schemes)),
        model_path=Path(args.model) if args.model else None,
        constant_multiplier=args.delta,
        convention=L2Convention(args.l2_convention),
        workers=args.workers,
        cache_dir=get_cache_dir(args.cache_dir),
        compute_references=not args.cached_only,
    )
    print(f"Comparing {', '.join(options.schemes)} on {len(specs)} problem(s), N={n_intervals}")
    report = compare(specs, options)
    print()
    print(report.to_text())
    if args.out:
        _write_rows(Path(args.out), report.to_csv_rows())
        print(f"\n✅ Table written to {args.out}")
    if args.json:
        _write_json(Path(args.json), report.to_dict())
        print(f"✅ JSON written to {args.json}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    ns = _int_list(args.ns)
    if len(ns) < 2 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ProblemSpecError(f"Need at least two increasing grid sizes, got {ns}")
    if ns[0] < MIN_INTERVALS:
        raise ProblemSpecError(f"Need at least {MIN_INTERVALS} intervals, got {ns[0]}")
    scheme = Weighting(args.scheme)
    multipliers, C = _multiplier_source(args.model, args.delta)
    if scheme is Weighting.DS and multipliers is None:
        raise ModelFileError("WENO-DS needs --model or --delta")
    cfg = SchemeConfig(scheme, C=C)
    source: Optional[MultiplierSource] = multipliers if scheme is Weighting.DS else None

    print(f"Convergence of WENO-{scheme.value.upper()} on transport, T={args.tfinal:g}")
    table = convergence_study(lambda n: transport_error(n, cfg, source, args.tfinal), ns,
                              label=scheme.value)
    print()
    print(table.to_text())
    if args.out:
        rows = [["N", "linf", "order"]] + [[str(r.n), f"{r.linf:.17g}",
                                             "" if r.order is None else f"{r.order:.17g}"]
                                            for r in table.rows]
        _write_rows(Path(args.out), rows)
        print(f"\n✅ Table written to {args.out}")
    if args.json:
        _write_json(Path(args.json), dict(table.to_dict(), final_time=args.tfinal,
                                          model=args.model, constant_multiplier=args.delta))
        print(f"✅ JSON written to {args.json}")
    return EXIT_OK


def cmd_train(args) -> int:
    options = TrainingOptions(
        protocol=args.protocol,
        seed=args.seed,
        cycles=args.cycles,
        runs=args.runs,
        lr=args.lr,
        n_intervals=args.nx,
        n_steps=args.nt,
        reference_intervals=args.reference_nx,
        reference_steps=args.reference_nt,
        zero_init=args.zero_init,
        output_dir=Path(args.out),
        cache_dir=get_cache_dir(args.cache_dir),
    )
    protocol = options.resolve()
    print(f"Training protocol '{args.protocol}': {protocol.runs} run(s) x {protocol.cycles} "
          f"cycles, lr={protocol.lr:g}, seed={args.seed}")

    def report(log) -> None:
        if log.aborted:
            print(f"⚠️ run {log.run} cycle {log.cycle}: aborted ({log.error})")
        else:
            print(f"   run {log.run} cycle {log.cycle}: validation {log.validation_loss:.4e}")

    result = train(options, on_cycle=report)
    print(f"\n✅ Selected run {result.best.run} cycle {result.best.cycle} "
          f"(validation {result.best.validation_loss:.4e})")
    print(f"   model: {result.model_path}")
    print(f"   log:   {result.log_path}")
    return EXIT_OK


def cmd_gen_dataset(args) -> int:
    samples = generate_dataset(args.family, args.count, args.seed)
    document = {"family": args.family, "seed": args.seed, "count": args.count,
                "samples": [sample.to_dict() for sample in samples]}
    if args.out:
        _write_json(Path(args.out), document)
        print(f"✅ {len(samples)} samples written to {args.out}")
    else:
        print(json.dumps(document, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_riemann(args) -> int:
    problem = parse_problem(args.problem, args.tfinal)
    if not isinstance(problem, EulerProblem):
        raise ProblemSpecError(f"'{args.problem}' is not an Euler problem")
    star = exact_riemann(problem.left, problem.right, problem.gamma)
    print(f"p* = {star.p_star:.10f}, u* = {star.u_star:.10f} "
          f"({star.left_wave.value} | {star.right_wave.value})")
    grid = problem.make_grid(args.nx)
    x = grid.nodes(problem.boundary)
    rho, u, p = exact_solution(problem, x, problem.final_time, star)
    write_snapshot(Path(args.out), x, {"rho": rho, "u": u, "p": p})
    print(f"✅ Exact solution at T={problem.final_time:g} written to {args.out}")
    return EXIT_OK


def _add_scheme_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", help="Trained model file for WENO-DS")
    parser.add_argument("--delta", type=float,
                        help="Use this constant multiplier for WENO-DS instead of a model")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(prog="weno-ds",
                                     description="WENO-JS / WENO-Z / WENO-DS benchmark tools")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging and tracebacks")
    sub = parser.add_subparsers(dest="command", required=True)
    schemes = [w.value for w in Weighting]
    conventions = [c.value for c in L2Convention]

    solve = sub.add_parser("solve", help="Run one scheme on one problem")
    solve.add_argument("problem", help="Problem spec, e.g. 'burgers:ic=sine,z=1.6'")
    solve.add_argument("--scheme", choices=schemes, default=Weighting.Z.value)
    _add_scheme_flags(solve)
    solve.add_argument("--nx", type=_grid_size, help="Grid intervals (64 for Euler, 128 otherwise)")
    step = solve.add_mutually_exclusive_group()
    step.add_argument("--nt", type=int, help="Fixed number of time steps")
    step.add_argument("--cfl", type=float, default=DEFAULT_CFL, help="Courant number (Euler)")
    solve.add_argument("--tfinal", type=float, help="Override the final time")
    solve.add_argument("--snapshots", help="Comma-separated extra output times")
    solve.add_argument("--out", default="solution.csv", help="Output CSV path")
    solve.set_defaults(handler=cmd_solve)

    comp = sub.add_parser("compare", help="Error table of several schemes")
    comp.add_argument("problems", help="Problem set name (bl-test, burgers-test, "
                                       "burgers-extrapolation, euler-test) or ';'-separated specs")
    comp.add_argument("--scheme", action="append", choices=schemes,
                      help="Scheme to include (repeatable; default js, z and ds with a model)")
    _add_scheme_flags(comp)
    comp.add_argument("--nx", type=_grid_size, help="Grid intervals (64 for Euler sets, 128 otherwise)")
    comp.add_argument("--nt", type=int, help="Fixed step count for scalar problems")
    comp.add_argument("--cfl", type=float, default=DEFAULT_CFL, help="Courant number (Euler)")
    comp.add_argument("--l2-convention", choices=conventions, default=L2Convention.RMS.value)
    comp.add_argument("--workers", type=int, default=1, help="Worker processes")
    comp.add_argument("--cache-dir", help=f"Reference cache (can also set {CACHE_ENV_VAR})")
    comp.add_argument("--cached-only", action="store_true",
                      help="Fail instead of computing missing fine references")
    comp.add_argument("--out", help="Write the table as CSV")
    comp.add_argument("--json", help="Write the report with provenance as JSON")
    comp.set_defaults(handler=cmd_compare)

    conv = sub.add_parser("convergence", help="Observed order on smooth transport")
    conv.add_argument("--scheme", choices=schemes, default=Weighting.Z.value)
    _add_scheme_flags(conv)
    conv.add_argument("--ns", default=DEFAULT_CONVERGENCE_NS, help="Comma-separated grid sizes")
    conv.add_argument("--tfinal", type=float, default=0.5)
    conv.add_argument("--out", help="Write the table as CSV")
    conv.add_argument("--json", help="Write the table as JSON")
    conv.set_defaults(handler=cmd_convergence)

    tr = sub.add_parser("train", help="Train the smoothness network")
    tr.add_argument("protocol", choices=sorted(TRAINING_PROTOCOLS), help="Training protocol")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--cycles", type=int, help="Cycles per run")
    tr.add_argument("--runs", type=int, help="Independent runs")
    tr.add_argument("--lr", type=float, help="Adam learning rate")
    tr.add_argument("--nx", type=_grid_size, help="Training grid intervals")
    tr.add_argument("--nt", type=int, help="Training step count")
    tr.add_argument("--reference-nx", type=_grid_size, help="Fine reference grid intervals")
    tr.add_argument("--reference-nt", type=int, help="Fine reference step count")
    tr.add_argument("--zero-init", action="store_true", help="Start from all-zero weights")
    tr.add_argument("--cache-dir", help=f"Reference cache (can also set {CACHE_ENV_VAR})")
    tr.add_argument("--out", default="training_runs", help="Output directory")
    tr.set_defaults(handler=cmd_train)

    gen = sub.add_parser("gen-dataset", help="Sample training problems")
    gen.add_argument("family", choices=sorted(TRAINING_PROTOCOLS), help="Problem family")
    gen.add_argument("--count", type=int, default=100)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", help="Manifest path (prints to stdout when omitted)")
    gen.set_defaults(handler=cmd_gen_dataset)

    rm = sub.add_parser("riemann", help="Exact Riemann solution")
    rm.add_argument("problem", nargs="?", default="euler:preset=sod",
                    help="Euler problem spec (default: Sod)")
    rm.add_argument("--nx", type=_grid_size, default=64, help="Grid intervals")
    rm.add_argument("--tfinal", type=float, help="Override the final time")
    rm.add_argument("--out", default="riemann.csv", help="Output CSV path")
    rm.set_defaults(handler=cmd_riemann)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(level=logging.DEBUG if args.debug else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except KeyboardInterrupt:
        print("\nOperation aborted by user")
        return EXIT_INTERRUPTED
    except ReferenceMissing as e:
        print(f"❌ Missing reference: {e}")
        return EXIT_NO_REFERENCE
    except (ModelFileError, FileNotFoundError) as e:
        print(f"❌ Model error: {e}")
        return EXIT_BAD_MODEL
    except ProblemSpecError as e:
        print(f"❌ Invalid problem: {e}")
        return EXIT_BAD_SPEC
    except (SolverAbort, RiemannSolverError) as e:
        print(f"❌ Solver aborted: {e}")
        return EXIT_SOLVER_ABORT
    except Exception as e:
        print(f"❌ Error: {e}")
        if args.debug:
            import traceback
            traceback.print_exc()
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
