"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems (bad flags,
malformed input files, impossible solver/system pairings) exit with 2,
numerical failures (singular factorizations, non-convergent eigensolves)
exit with 3.
"""


class KaczgsError(Exception):
    """Base class for all package errors."""


class ConfigurationError(KaczgsError):
    """Invalid configuration: bad arguments, incompatible solver/system pairs."""


class ParseError(ConfigurationError):
    """Malformed text input; message carries file path and line number."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


class NumericalError(KaczgsError):
    """Numerical failure outside configuration control."""


class SingularMatrixError(NumericalError):
    """Rank-deficient matrix where a full-rank factorization was required."""
