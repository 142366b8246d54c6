#!/usr/bin/env python3
"""Run the modified Sod shock tube with WENO-JS and WENO-Z.

This script:
1. Solves the shock tube on a coarse grid with CFL-adaptive steps
2. Computes the exact solution with the Riemann solver
3. Prints density, velocity and pressure errors for each scheme
4. Optionally writes every solution as CSV
"""

import argparse
import os
import sys

# Add src directory to path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from weno_ds.benchmark import error_norms, format_table
from weno_ds.errors import SolverAbort
from weno_ds.flux_models import primitive_from_conserved
from weno_ds.mesh import write_snapshot
from weno_ds.problems import euler_problem
from weno_ds.reference_oracles import exact_riemann, exact_solution
from weno_ds.time_integration import StepPlan, run
from weno_ds.weno_kernel import SchemeConfig, Weighting


def parse_args():
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(description="Shock tube with WENO-JS and WENO-Z")
    parser.add_argument("--preset", default="sod-mod", choices=["sod", "sod-mod", "lax"],
                        help="Shock tube initial data")
    parser.add_argument("--nx", type=int, default=64, help="Grid intervals")
    parser.add_argument("--cfl", type=float, default=0.9, help="Courant number")
    parser.add_argument("--output", help="Directory for CSV output")
    parser.add_argument("--debug", action="store_true", help="Enable debug mode")
    return parser.parse_args()


def main():
    """Main entry point for the shock tube example."""
    args = parse_args()
    problem = euler_problem(args.preset)
    grid = problem.make_grid(args.nx)
    x = grid.nodes(problem.boundary)

    star = exact_riemann(problem.left, problem.right, problem.gamma)
    print(f"Exact star state: p* = {star.p_star:.6f}, u* = {star.u_star:.6f}")
    exact = exact_solution(problem, x, problem.final_time, star)
    if args.output:
        write_snapshot(os.path.join(args.output, "exact.csv"), x,
                       dict(zip(("rho", "u", "p"), exact)))

    rows = []
    for weighting in (Weighting.JS, Weighting.Z):
        try:
            trajectory = run(problem, SchemeConfig(weighting),
                             StepPlan.adaptive(problem.final_time, args.cfl), grid)
        except SolverAbort as e:
            print(f"❌ WENO-{weighting.value.upper()} aborted: {e}")
            if args.debug:
                import traceback
                traceback.print_exc()
            return 1
        primitive = primitive_from_conserved(trajectory.final, problem.gamma)
        print(f"✅ WENO-{weighting.value.upper()}: {trajectory.n_steps} steps")
        for name, q, ref in zip(("rho", "u", "p"), primitive, exact):
            linf, l2 = error_norms(q, ref, grid.dx)
            rows.append([f"{weighting.value} {name}", f"{linf:.6f}", f"{l2:.6f}"])
        if args.output:
            write_snapshot(os.path.join(args.output, f"{weighting.value}.csv"), x,
                           dict(zip(("rho", "u", "p"), primitive)))

    print()
    print(format_table(["field", "linf", "l2"], rows))
    return 0


if __name__ == "__main__":
    sys.exit(main())
