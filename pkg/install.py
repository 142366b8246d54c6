#!/usr/bin/env python3
"""Installation script for WENO-DS.

This script helps users set up the environment for running the solvers,
the benchmarks and the training pipeline.
"""

import os
import subprocess
import sys
from pathlib import Path


def print_step(step_num, total_steps, message):
    """Print a formatted step message."""
    print(f"\n[{step_num}/{total_steps}] {message}")


def run_command(command, error_message=None):
    """Run a shell command and handle errors."""
    try:
        subprocess.run(command, check=True, shell=True)
        return True
    except subprocess.CalledProcessError:
        if error_message:
            print(f"Error: {error_message}")
        return False


def install_package():
    """Install the WENO-DS package in development mode."""
    print_step(1, 5, "Installing WENO-DS package...")
    return run_command(
        f"{sys.executable} -m pip install -e .",
        "Failed to install the package. Please check for errors above."
    )


def install_dependencies():
    """Install required dependencies."""
    print_step(2, 5, "Installing dependencies...")
    return run_command(
        f"{sys.executable} -m pip install -r requirements.txt",
        "Failed to install dependencies. Please check for errors above."
    )


def check_cache_dir():
    """Report where fine reference solutions will be cached."""
    print_step(3, 5, "Checking the reference cache...")
    cache = os.environ.get("WENO_DS_CACHE")
    if cache:
        path = Path(cache)
        print(f"WENO_DS_CACHE is set: {path}")
    else:
        path = Path.home() / ".cache" / "weno_ds"
        print(f"WENO_DS_CACHE not set, using default: {path}")
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        print(f"Error: cannot create cache directory {path}: {e}")
        return False
    return True


def create_directories():
    """Create necessary directories."""
    print_step(4, 5, "Creating necessary directories...")
    os.makedirs("training_runs", exist_ok=True)
    os.makedirs("results", exist_ok=True)


def print_completion():
    """Print completion message with usage instructions."""
    print_step(5, 5, "Installation complete!")

    print("\nTo use WENO-DS, run commands like:")
    print("  python src/run.py solve euler:preset=sod-mod --scheme z --out results/sod_mod.csv")
    print("  python src/run.py compare bl-test")
    print("\nTo test your setup:")
    print("  python -m pytest -m 'not slow'")

    print("\nFine references for Burgers and Buckley-Leverett are computed on first")
    print("use and cached; set WENO_DS_CACHE to share the cache between checkouts.")


def main():
    """Main installation function."""
    print("=== WENO-DS Setup ===")

    installed = install_package() and install_dependencies()
    cache_ok = check_cache_dir()
    create_directories()

    print_completion()

    if not installed:
        print("\nWARNING: Installation reported errors. Check the pip output above.")
        return 1
    if not cache_ok:
        print("\nWARNING: The reference cache is not writable. Pass --cache-dir when running compare or train.")

    return 0


if __name__ == "__main__":
    sys.exit(main())
