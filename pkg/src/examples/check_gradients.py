#!/usr/bin/env python3
"""Check tape gradients of one WENO-DS step against finite differences.

Runs one Burgers step on a small grid with a small network and compares
the reverse-mode gradient of the step loss with central differences.
"""

import argparse
import os
import sys

import numpy as np

# Add src directory to path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from weno_ds import autodiff as ad
from weno_ds.deep_smoothness import BoundModel, default_architecture, init_model
from weno_ds.problems import burgers_problem
from weno_ds.semidiscrete import semidiscrete_rhs, wave_speeds
from weno_ds.time_integration import rk3_step
from weno_ds.weno_kernel import SchemeConfig, Weighting


def parse_args():
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(description="Gradient check of one WENO-DS step")
    parser.add_argument("--nx", type=int, default=16, help="Grid intervals")
    parser.add_argument("--seed", type=int, default=0, help="Weight initialization seed")
    parser.add_argument("--tolerance", type=float, default=1e-5, help="Maximum relative error")
    parser.add_argument("--debug", action="store_true", help="Enable debug mode")
    return parser.parse_args()


def main():
    """Main entry point for the gradient check."""
    args = parse_args()
    problem = burgers_problem("sine", 1.0)
    grid = problem.make_grid(args.nx)
    u0 = problem.initial_values(grid)
    target = np.roll(u0, 1)
    dt = 0.2 * grid.dx
    model = init_model(default_architecture((2, 4, 1), (3, 3)), np.random.default_rng(args.seed))
    alpha = wave_speeds(u0, problem)
    cfg = SchemeConfig(Weighting.DS, C=model.C)
    split = len(model.positive.params)

    def step_loss(params):
        source = BoundModel(model, list(params[:split]), list(params[split:]))
        u1 = rk3_step(u0, dt, lambda v: semidiscrete_rhs(v, problem, grid.dx, cfg, source, alpha))
        diff = u1 - target
        return ad.sum_(diff * diff)

    params = model.positive.params + model.negative.params
    print(f"Checking {sum(p.size for p in params)} parameters on N={args.nx}...")
    try:
        worst = ad.grad_check(step_loss, params)
    except Exception as e:
        print(f"❌ Gradient check failed: {e}")
        if args.debug:
            import traceback
            traceback.print_exc()
        return 1
    if worst < args.tolerance:
        print(f"✅ Max relative error {worst:.3e}")
        return 0
    print(f"❌ Max relative error {worst:.3e} exceeds {args.tolerance:g}")
    return 1


if __name__ == "__main__":
    sys.exit(main())
