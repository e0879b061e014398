"""Exception types raised across the package."""


class CalibrationError(Exception):
    """Base class for all errors raised by edfcalib."""


class DomainError(CalibrationError, ValueError):
    """A value lies outside the domain required by the selected family."""


class EmptyInput(CalibrationError, ValueError):
    """An operation received zero observations."""


class NonpositiveWeight(CalibrationError, ValueError):
    """A case weight is zero or negative."""


class DegenerateSplit(CalibrationError, ValueError):
    """A sample split would leave one part empty."""


class ConfigError(CalibrationError, ValueError):
    """A test or study configuration is inconsistent."""


class InsufficientData(CalibrationError, ValueError):
    """Too few observations or trials for the requested estimate."""
