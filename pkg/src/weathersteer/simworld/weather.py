"""Parametric weather conditions.

15 conditions, ids 0..14.  Id 0 is the clear baseline: identity palette,
brightness 1, contrast 1, no fog/rain/noise.  Ids 1-2 are mild variations;
3-14 are visually distant (heavy fog, rain, dusk and night palettes).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from importlib import resources
from pathlib import Path

from ..errors import ConfigError

N_WEATHERS = 15

# canonical scene colors; weather 0 uses these unchanged
BASE_ROAD = (0.32, 0.32, 0.34)
BASE_OFFROAD = (0.36, 0.52, 0.30)
BASE_MARKING = (0.92, 0.92, 0.88)
SKY_COLOR = (0.55, 0.70, 0.90)
FOG_COLOR = (0.75, 0.78, 0.80)

_PALETTE_KEYS = ("road_palette", "offroad_palette", "marking_palette")
_SCALAR_KEYS = ("brightness", "contrast", "fog_density", "rain_intensity", "noise_sigma")
_ALL_KEYS = ("id",) + _PALETTE_KEYS + _SCALAR_KEYS


@dataclass(frozen=True)
class WeatherParams:
    id: int
    road_palette: tuple[float, float, float]
    offroad_palette: tuple[float, float, float]
    marking_palette: tuple[float, float, float]
    brightness: float
    contrast: float
    fog_density: float
    rain_intensity: float
    noise_sigma: float

    def __post_init__(self):
        if not (0 <= self.id < N_WEATHERS):
            raise ConfigError(f"weather id {self.id} outside 0..{N_WEATHERS - 1}")
        for key in _PALETTE_KEYS:
            rgb = getattr(self, key)
            if len(rgb) != 3 or any(not (0.0 <= v <= 1.0) for v in rgb):
                raise ConfigError(f"weather {self.id}: {key} must be RGB in [0,1]")
        if not (0.0 <= self.fog_density <= 1.0 and 0.0 <= self.rain_intensity <= 1.0):
            raise ConfigError(f"weather {self.id}: fog/rain must lie in [0,1]")
        if self.noise_sigma < 0:
            raise ConfigError(f"weather {self.id}: noise_sigma must be >= 0")


def _w(id, road, offroad, marking, brightness, contrast, fog, rain, noise):
    return WeatherParams(id, tuple(road), tuple(offroad), tuple(marking),
                         brightness, contrast, fog, rain, noise)


def default_weather_table() -> dict[int, WeatherParams]:
    """The shipped 15-condition table (see data/weathers.json)."""
    path = resources.files("weathersteer").joinpath("data/weathers.json")
    with resources.as_file(path) as p:
        return load_weather_table(p)


def load_weather_table(path: str | Path) -> dict[int, WeatherParams]:
    try:
        records = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read weather config {path}: {exc}") from exc
    if not isinstance(records, list) or len(records) != N_WEATHERS:
        raise ConfigError(f"weather config must hold exactly {N_WEATHERS} records")
    table: dict[int, WeatherParams] = {}
    for rec in records:
        if set(rec) != set(_ALL_KEYS):
            raise ConfigError(f"weather record keys {sorted(rec)} != {sorted(_ALL_KEYS)}")
        w = _w(rec["id"], rec["road_palette"], rec["offroad_palette"],
               rec["marking_palette"], rec["brightness"], rec["contrast"],
               rec["fog_density"], rec["rain_intensity"], rec["noise_sigma"])
        if w.id in table:
            raise ConfigError(f"duplicate weather id {w.id}")
        table[w.id] = w
    return table


def save_weather_table(path: str | Path, table: dict[int, WeatherParams]) -> None:
    records = [asdict(table[i]) for i in sorted(table)]
    Path(path).write_text(json.dumps(records, indent=2) + "\n")
