"""Means of positive-definite matrices defined by the Generalized Karcher Equation.

The package solves ``Σᵢ wᵢ g(X^{-1/2} Aᵢ X^{-1/2}) = 0`` for operator monotone
generators ``g``, evaluates the scalar representing functions of two-variable
means, and checks the inequalities these means satisfy on random instances.
"""

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "cli",
    "config",
    "flows",
    "gke_solver",
    "monotone_fns",
    "rep_func",
    "spd_core",
    "tasks",
    "verify",
]
