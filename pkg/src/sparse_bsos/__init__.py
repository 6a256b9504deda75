"""Sparse bounded-degree SOS relaxations for polynomial optimization."""
from .poly import Polynomial, enumerate_monomials
from .sparsity import PopProblem, SparsityPattern, detect_pattern, validate

__version__ = "0.1.0"

__all__ = [
    "Polynomial",
    "PopProblem",
    "SparsityPattern",
    "detect_pattern",
    "enumerate_monomials",
    "validate",
]
