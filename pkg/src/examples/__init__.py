"""WENO-DS example scripts.

This package provides example scripts that exercise the solvers, the
benchmark tools and the training pipeline, from a single shock tube run
to a short end-to-end training session.
"""

__all__ = ['sod_shock_tube', 'convergence_study', 'train_buckley_leverett', 'check_gradients']
