class CurveSigError(Exception):
    """Base class for all library errors."""


class InvalidSizeError(CurveSigError, ValueError):
    pass


class InvalidParameterError(CurveSigError, ValueError):
    pass


class BoundaryError(CurveSigError, IndexError):
    """A window or section does not fit inside an open curve."""


class DegenerateInputError(CurveSigError, ValueError):
    """Coincident points where distinct ones are required."""


class NonInvertibleError(CurveSigError, ValueError):
    pass


class SkipCurve(CurveSigError):
    """Raised by tuplet generators when a curve cannot support a tuplet."""


class TrainingDivergence(CurveSigError, FloatingPointError):
    pass


class CalibrationError(CurveSigError, ValueError):
    pass


class ComparisonError(CurveSigError, ValueError):
    pass


class ConfigurationError(CurveSigError, ValueError):
    pass


class PlotError(CurveSigError, ValueError):
    pass
