"""Exception hierarchy shared across the package.

Anything user-facing (CLI, config parsing, scene construction) raises one of
these; the CLI maps them to exit codes: validation errors exit 2, numerical
failures exit 3, I/O problems exit 4.
"""


class MellinRadonError(Exception):
    """Base class for all package errors."""


class ValidationError(MellinRadonError):
    """Bad user input: config, expression syntax, parameter domains."""


class CostParseError(ValidationError):
    """Cost expression text that cannot be parsed or violates parameter rules."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class DomainError(ValidationError):
    """Arguments outside the mathematical domain (non-positive coordinates,
    weights off the simplex, exponents out of range)."""


class DimensionMismatchError(ValidationError):
    """Vectors, grids, or trees whose dimensions do not line up."""


class DegenerateProductionError(ValidationError):
    """Production-function parameters that do not admit a dual cost function."""


class ConfigError(ValidationError):
    """Malformed scene configuration file."""


class NumericalError(MellinRadonError):
    """Numerical failure: divergence, coverage, instability."""


class GammaPoleError(NumericalError):
    """Gamma function evaluated at a non-positive integer."""


class CoverageError(NumericalError):
    """A level set or integrand support extends past the sample box."""


class ResolutionError(NumericalError):
    """A requested step is finer than the grid can resolve."""


class NonConvergenceError(NumericalError):
    """An iterative solver failed to converge."""


class IntegrabilityError(NumericalError):
    """A kernel or integrand is non-integrable on its domain."""


class DivisionInstabilityError(NumericalError):
    """Spectral division attempted with an unusable regularization setting."""


class GridMismatchError(ValidationError):
    """Grids that must share sample counts and spacings do not."""
