"""
svicert
Solvers and solvability certificates for stochastic variational inequality,
quasi-variational inequality and complementarity problems.
"""

__version__ = "1.0.0"
__author__ = "svicert developers"
