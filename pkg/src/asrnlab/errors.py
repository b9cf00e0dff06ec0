"""Exception types raised across the package."""


class AsrnLabError(Exception):
    """Base class for all package errors."""


class InvalidActionError(AsrnLabError, IndexError):
    pass


class InvalidDiscountError(AsrnLabError, ValueError):
    pass


class PhaseError(AsrnLabError, RuntimeError):
    """Calibration buffer used outside its collection phase."""


class CalibrationError(AsrnLabError, ValueError):
    pass


class ConfigError(AsrnLabError, ValueError):
    pass


class EpisodeRangeError(AsrnLabError, IndexError):
    pass
