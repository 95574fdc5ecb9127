"""Approximation scheme and regularity checks for singular mixed local/nonlocal p-Laplace problems."""

from ._core import (
    Config,
    ConfigError,
    Error,
    Expression,
    InvariantViolation,
    NonConvergence,
    check_alg_inequality,
    check_structure_hypotheses,
    convergence,
    regularity,
    run,
    sequence,
)

__all__ = [
    "Config",
    "ConfigError",
    "Error",
    "Expression",
    "InvariantViolation",
    "NonConvergence",
    "check_alg_inequality",
    "check_structure_hypotheses",
    "convergence",
    "regularity",
    "run",
    "sequence",
]
