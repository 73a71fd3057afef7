"""Exception types shared across the package.

CLI exit codes: ConfigError -> 2, NumericError -> 3.
"""


class WeatherSteerError(Exception):
    """Base class for package errors."""


class ConfigError(WeatherSteerError):
    """Bad configuration: unknown weather id, malformed config file, etc."""


class NumericError(WeatherSteerError):
    """Non-finite value encountered where finiteness is required."""


class OffTrackError(WeatherSteerError):
    """Vehicle left the recovery band around the centerline."""


class UsageError(WeatherSteerError):
    """API misuse: empty batch, missing tape, unlabeled eval sample, ..."""
