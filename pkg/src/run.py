#!/usr/bin/env python3
"""Main script for running the WENO-DS benchmark tools.

This script forwards to the ``weno-ds`` command-line interface so the
tools can be used from a checkout without installing the package.
"""

import os
import sys

# Add src directory to path for imports
sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from weno_ds.bench_cli import main


if __name__ == "__main__":
    sys.exit(main())
