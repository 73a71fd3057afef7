"""Cross-weather steering transfer workbench.

A procedural driving simulator, a minimal differentiable-computation core,
the auxiliary-weighted steering model, domain translators, teacher-student
distillation, and offline/online evaluation harnesses.
"""

from . import distill, domainxfer, evalharness, model, simworld, tensornet
from .errors import ConfigError, NumericError, OffTrackError, UsageError, WeatherSteerError

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "NumericError",
    "OffTrackError",
    "UsageError",
    "WeatherSteerError",
    "distill",
    "domainxfer",
    "evalharness",
    "model",
    "simworld",
    "tensornet",
]
