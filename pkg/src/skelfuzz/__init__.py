"""Skeleton-guided, grammar-driven differential fuzzing of SMT solvers."""

__version__ = "0.1.0"
