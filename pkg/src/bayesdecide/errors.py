"""Shared exception types.

``ValidationError`` covers malformed inputs (bad parameters, bad files,
bad scenario documents) and maps to CLI exit code 2.  ``NumericError``
covers failures discovered during computation (divergent expectations,
bracket expansion running away, non-finite integrands) and maps to exit
code 3.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition or schema."""


class NumericError(RuntimeError):
    """A numeric computation failed (divergence, overflow, non-finite value)."""


class DivergentMgfError(NumericError):
    """E(exp{-psi*Y} | z) does not exist for the requested psi."""
