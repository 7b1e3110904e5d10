"""Exception taxonomy shared across the package.

ConfigError maps to CLI exit code 2, NumericDomainError to exit code 3.
"""


class BimetricError(Exception):
    pass


class ConfigError(BimetricError):
    """Bad scene file, unknown name, wrong dimension, malformed flag."""


class NumericDomainError(BimetricError):
    """Evaluation hit a singularity or a degenerate metric."""


class SingularityError(NumericDomainError):
    """An expression was evaluated where it is not smooth."""

    def __init__(self, message, subexpr=None):
        if subexpr is not None:
            message = f"{message} in subexpression '{subexpr}'"
        super().__init__(message)
        self.subexpr = subexpr


class SPDError(NumericDomainError):
    """The base (or collapsed) metric failed the positive-definite test."""

    def __init__(self, message, smallest_pivot=None):
        if smallest_pivot is not None:
            message = f"{message} (smallest pivot {smallest_pivot:.3e})"
        super().__init__(message)
        self.smallest_pivot = smallest_pivot
