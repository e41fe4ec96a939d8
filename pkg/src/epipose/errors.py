"""Exception hierarchy shared by all epipose modules."""


class EpiposeError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(EpiposeError, ValueError):
    pass


class InsufficientData(EpiposeError, ValueError):
    pass


class DegenerateConfiguration(EpiposeError):
    pass


class ZeroMatrix(EpiposeError, ValueError):
    pass


class GradientUndefined(EpiposeError):
    pass


class InvalidRotation(EpiposeError, ValueError):
    pass


class EpipoleDegenerate(EpiposeError):
    pass


class PointAtInfinity(EpiposeError):
    pass


class NoValidPose(EpiposeError):
    pass


class WeightCollapse(EpiposeError):
    pass


class ModelLoadError(EpiposeError):
    pass


class NoConsensus(EpiposeError):
    pass


class GenerationFailed(EpiposeError):
    pass


class ZeroBaseline(EpiposeError):
    pass


class DegenerateAlignment(EpiposeError):
    pass


class ParseError(EpiposeError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
