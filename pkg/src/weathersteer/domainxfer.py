"""Pluggable image-to-image domain translators.

Two kinds stand in for learned translation networks:

  oracle      re-renders the stored scene state under the target weather;
              perfect translation by construction.
  parametric  classifies the clear-weather pixels back to scene classes by
              nearest palette color and reapplies the target weather chain,
              optionally degraded: fidelity 1 is an exact color model, lower
              fidelity adds a structured, translator-specific palette error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UsageError
from .simworld.dataset import Sample
from .simworld.render import apply_weather_chain
from .simworld.weather import (
    BASE_MARKING,
    BASE_OFFROAD,
    BASE_ROAD,
    SKY_COLOR,
    WeatherParams,
)

F32 = np.float32

DEFAULT_TARGETS = (2, 3, 4, 6, 8, 9, 10, 11, 12, 13)


@dataclass(frozen=True)
class Translator:
    kind: str  # "oracle" | "parametric"
    target: int
    fidelity: float = 1.0  # parametric only

    def __post_init__(self):
        if self.kind not in ("oracle", "parametric"):
            raise ConfigError(f"unknown translator kind {self.kind!r}")
        if not (0 <= self.target <= 14):
            raise ConfigError(f"translator target {self.target} outside 0..14")
        if not (0.0 <= self.fidelity <= 1.0):
            raise ConfigError(f"fidelity {self.fidelity} outside [0,1]")


def _classify_base_pixels(image: np.ndarray) -> np.ndarray:
    """Map a weather-0 image back to class indices by nearest base color."""
    palette = np.array([BASE_ROAD, BASE_OFFROAD, BASE_MARKING, SKY_COLOR], dtype=F32)
    d = ((image[:, :, None, :] - palette[None, None, :, :]) ** 2).sum(axis=-1)
    return d.argmin(axis=-1).astype(np.uint8)


def _degraded(weather: WeatherParams, fidelity: float) -> WeatherParams:
    """Structured palette/photometric error growing with (1 - fidelity)."""
    if fidelity >= 1.0:
        return weather
    e = 1.0 - fidelity
    rng = np.random.Generator(np.random.PCG64(0xD0A11 + weather.id))
    def drift(rgb):
        shift = rng.uniform(-0.25, 0.25, size=3)
        return tuple(float(np.clip(v + e * s, 0.0, 1.0)) for v, s in zip(rgb, shift))
    return WeatherParams(
        weather.id,
        drift(weather.road_palette),
        drift(weather.offroad_palette),
        drift(weather.marking_palette),
        max(0.0, weather.brightness * (1.0 + e * 0.25)),
        max(0.0, weather.contrast * (1.0 - e * 0.2)),
        float(np.clip(weather.fog_density * (1.0 + e * 0.3), 0.0, 1.0)),
        weather.rain_intensity,
        weather.noise_sigma,
    )


def translate(t: Translator, sample: Sample,
              weathers: dict[int, WeatherParams]) -> np.ndarray:
    """Translate a weather-0 sample's image to the target weather."""
    if sample.weather != 0:
        raise UsageError(f"translator input must be weather 0, got {sample.weather}")
    if t.target not in weathers:
        raise ConfigError(f"unsupported translation target {t.target}")
    if t.target == 0:
        return sample.image.copy()
    if t.kind == "oracle":
        if sample.scene is None:
            raise UsageError("oracle translator requires the sample's scene state")
        from .simworld.render import render

        return render(sample.scene.with_weather(t.target), weathers)
    cls = _classify_base_pixels(sample.image)
    target = _degraded(weathers[t.target], t.fidelity)
    stream = sample.scene.rng_stream_id if sample.scene is not None else 0
    return apply_weather_chain(cls, target, stream)


def build_translation_table(targets=DEFAULT_TARGETS, kind: str = "oracle",
                            fidelity: float = 1.0) -> dict[int, Translator]:
    if not targets:
        raise ConfigError("translator target list is empty")
    if len(set(targets)) != len(targets):
        raise ConfigError(f"duplicate translation targets in {list(targets)}")
    return {t: Translator(kind, t, fidelity) for t in targets}
