"""Exact computations with twisted complexes over finite simplicial spaces."""

__version__ = "0.1.0"

from .errors import ConventionError, InvariantViolation, StructuralError, TruncationError, VerificationFailure
from .exact_linalg import GF, QQ, parse_ring
from .report import Report

__all__ = [
    "__version__",
    "QQ",
    "GF",
    "parse_ring",
    "Report",
    "StructuralError",
    "TruncationError",
    "InvariantViolation",
    "ConventionError",
    "VerificationFailure",
]
