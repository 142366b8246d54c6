#!/usr/bin/env python3
"""Short Buckley-Leverett training run followed by a comparison.

This script:
1. Trains the smoothness networks for a few cycles on a reduced grid
2. Compares WENO-JS, WENO-Z and the trained WENO-DS on two test values

The full protocol is ``weno-ds train bl``; this run is sized to finish in
minutes so the whole pipeline can be tried out.
"""

import argparse
import os
import sys
from pathlib import Path

# Add src directory to path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from weno_ds.benchmark import CompareOptions, compare
from weno_ds.training import TrainingOptions, train


def parse_args():
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(description="Short Buckley-Leverett training run")
    parser.add_argument("--cycles", type=int, default=5, help="Training cycles")
    parser.add_argument("--seed", type=int, default=0, help="Master seed")
    parser.add_argument("--output", default="training_runs/bl_example", help="Output directory")
    parser.add_argument("--debug", action="store_true", help="Enable debug mode")
    return parser.parse_args()


def main():
    """Main entry point for the training example."""
    args = parse_args()
    options = TrainingOptions(protocol="bl", seed=args.seed, cycles=args.cycles,
                              n_intervals=64, n_steps=70, reference_intervals=512,
                              reference_steps=2240, output_dir=Path(args.output))

    def on_cycle(log):
        status = "⚠️ aborted" if log.aborted else f"validation {log.validation_loss:.4e}"
        print(f"cycle {log.cycle}: {status}")

    try:
        result = train(options, on_cycle=on_cycle)
    except ValueError as e:
        print(f"❌ Training failed: {e}")
        if args.debug:
            import traceback
            traceback.print_exc()
        return 1
    print(f"✅ Best model: {result.model_path}")

    report = compare(["bl:a=0.25", "bl:a=0.6"],
                     CompareOptions(n_intervals=64, n_steps=70, model_path=result.model_path))
    print()
    print(report.to_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
