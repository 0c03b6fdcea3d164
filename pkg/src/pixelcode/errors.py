"""Exception hierarchy for the pixelcode library."""


class PixelcodeError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(PixelcodeError, ValueError):
    """Array shapes or lengths are inconsistent with the model."""


class SingularNetwork(PixelcodeError):
    """The on-switch port subsystem is numerically singular."""


class ZeroPattern(PixelcodeError):
    """A coder radiates (numerically) nothing and cannot be normalized.

    ``side`` and ``index`` identify the offending coder when raised while
    assembling a multi-antenna channel.
    """

    def __init__(self, message, side=None, index=None):
        super().__init__(message)
        self.side = side
        self.index = index


class InvalidSpec(PixelcodeError, ValueError):
    """A model synthesis spec is malformed."""


class ParseError(PixelcodeError, ValueError):
    """A serialized document is malformed; the message names the field."""


class ValidationFailed(PixelcodeError):
    """A loaded model violates its invariants; carries the report."""

    def __init__(self, report):
        super().__init__("model validation failed: " + "; ".join(report))
        self.report = list(report)


class InvalidConfig(PixelcodeError, ValueError):
    """An optimizer configuration is out of range."""


class TooLarge(PixelcodeError, ValueError):
    """Exhaustive enumeration was requested beyond the hard size guard."""


class EmptyPartition(PixelcodeError, ValueError):
    """A centroid update was requested for an empty training partition."""


class InfeasibleAll(PixelcodeError):
    """Every candidate coder is infeasible (radiates nothing)."""


class AllZeroEigenvalues(PixelcodeError, ValueError):
    """Waterfilling over a spectrum with no positive eigenvalue."""


class DegenerateModel(PixelcodeError):
    """The open-circuit pattern matrix is identically zero."""


class NonFinite(PixelcodeError, ValueError):
    """An input matrix contains NaN or Inf entries."""


class ConfigError(PixelcodeError, ValueError):
    """An experiment configuration is invalid."""


class ModelLoadError(PixelcodeError):
    """A referenced model file could not be loaded."""
