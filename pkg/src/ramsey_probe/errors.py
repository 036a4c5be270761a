"""Exception hierarchy shared by all modules."""


class ProbeError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(ProbeError, ValueError):
    """Invalid argument (domain error)."""


class FormatError(ProbeError):
    """Malformed or inconsistent cache file."""


class ResourceError(ProbeError):
    """Requested problem exceeds a configured resource cap."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NumericError(ProbeError):
    """Propagation or eigensolve failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InconclusiveError(ProbeError):
    """Trace too short to reach a verdict."""


class SearchError(ProbeError):
    """A parameter sweep finished without locating a resonance."""


class OracleMismatch(ProbeError):
    """A quantum verdict disagrees with the classical brute-force oracle."""
