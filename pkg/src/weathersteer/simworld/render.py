"""Deterministic driver-view renderer.

Perspective ground-plane projection of the track (road surface, edge and
center lane markings, offroad, sky band), followed by the weather
post-processing chain in fixed order:

    palette -> contrast -> brightness -> fog (far rows foggier)
            -> rain streaks -> additive noise -> clamp

The base geometry pass emits a per-pixel class image; the weather chain is
shared with the parametric domain translator.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .scene import SceneState
from .track import get_track
from .weather import WeatherParams, FOG_COLOR, SKY_COLOR

IMG_SIZE = 64
CAM_HEIGHT = 1.5  # meters above ground
CAM_PITCH = np.radians(10.0)  # downward tilt
FOCAL = 40.0  # pixels
MAX_DEPTH = 50.0  # meters

MARKING_WIDTH = 0.30
MARKING_INSET = 0.10
CENTER_DASH_HALFWIDTH = 0.12
DASH_PERIOD = 4.0  # meters, 50% duty

CLASS_ROAD, CLASS_OFFROAD, CLASS_MARKING, CLASS_SKY = 0, 1, 2, 3


def _pixel_geometry():
    """Per-pixel ground-plane offsets in the vehicle frame (cached)."""
    v, u = np.meshgrid(np.arange(IMG_SIZE), np.arange(IMG_SIZE), indexing="ij")
    cx = cy = (IMG_SIZE - 1) / 2.0
    a = (u - cx) / FOCAL  # right
    b = (v - cy) / FOCAL  # down (pre-pitch)
    down = b * np.cos(CAM_PITCH) + np.sin(CAM_PITCH)
    fwd = np.cos(CAM_PITCH) - b * np.sin(CAM_PITCH)
    ground = down > 1e-6
    t = np.where(ground, CAM_HEIGHT / np.where(ground, down, 1.0), 0.0)
    depth = t * fwd
    ground &= (depth > 0) & (depth <= MAX_DEPTH)
    forward_px = np.where(ground, depth, 0.0).astype(np.float64)
    lateral_px = np.where(ground, t * a, 0.0).astype(np.float64)
    rows_with_ground = np.where(ground.any(axis=1))[0]
    horizon_row = int(rows_with_ground.min()) if len(rows_with_ground) else IMG_SIZE
    return ground, forward_px, lateral_px, horizon_row


_GEOM = None


def _geom():
    global _GEOM
    if _GEOM is None:
        _GEOM = _pixel_geometry()
    return _GEOM


def horizon_row() -> int:
    return _geom()[3]


def render_classes(scene: SceneState) -> np.ndarray:
    """Class image (64x64 uint8): road / offroad / marking / sky."""
    ground, fwd, lat, _ = _geom()
    track = get_track(scene.track_id)
    lo, res, dist_grid, s_grid = track.distance_field()
    th = scene.vehicle.heading
    c, s = np.cos(th), np.sin(th)
    px = scene.vehicle.x + fwd * c - lat * s
    py = scene.vehicle.y + fwd * s + lat * c
    gi = np.clip(((px - lo[0]) / res + 0.5).astype(np.int64), 0, dist_grid.shape[0] - 1)
    gj = np.clip(((py - lo[1]) / res + 0.5).astype(np.int64), 0, dist_grid.shape[1] - 1)
    dlat = dist_grid[gi, gj]
    along = s_grid[gi, gj]

    half = track.lane_width / 2.0
    cls = np.full((IMG_SIZE, IMG_SIZE), CLASS_SKY, dtype=np.uint8)
    road = ground & (dlat <= half)
    cls[ground & ~road] = CLASS_OFFROAD
    cls[road] = CLASS_ROAD
    edge = road & (dlat >= half - MARKING_INSET - MARKING_WIDTH) & (dlat <= half - MARKING_INSET)
    dash = road & (dlat <= CENTER_DASH_HALFWIDTH) & (np.mod(along, DASH_PERIOD) < DASH_PERIOD / 2)
    cls[edge | dash] = CLASS_MARKING
    return cls


def apply_weather_chain(cls: np.ndarray, weather: WeatherParams, stream_seed: int) -> np.ndarray:
    """Palette + photometric chain over a class image.  Deterministic in
    (cls, weather, stream_seed)."""
    palette = np.array(
        [weather.road_palette, weather.offroad_palette, weather.marking_palette, SKY_COLOR],
        dtype=np.float32,
    )
    img = palette[cls]  # HWC
    img = (img - np.float32(0.5)) * np.float32(weather.contrast) + np.float32(0.5)
    img = img * np.float32(weather.brightness)

    if weather.fog_density > 0:
        hrow = horizon_row()
        rows = np.arange(IMG_SIZE, dtype=np.float32)
        t = np.where(
            rows >= hrow,
            1.0 - (rows - hrow) / max(1, IMG_SIZE - 1 - hrow),
            rows / max(1, hrow),
        ).astype(np.float32)
        fac = (np.float32(weather.fog_density) * t)[:, None, None]
        fogc = np.asarray(FOG_COLOR, dtype=np.float32) * np.float32(weather.brightness)
        img = img * (1.0 - fac) + fogc * fac

    if weather.rain_intensity > 0 or weather.noise_sigma > 0:
        seed = (int(stream_seed) * 1000003 + weather.id) % (2**63)
        rng = np.random.Generator(np.random.PCG64(seed))
        if weather.rain_intensity > 0:
            n = int(round(weather.rain_intensity * 60))
            xs = rng.integers(0, IMG_SIZE, size=n)
            ys = rng.integers(0, IMG_SIZE - 8, size=n)
            lengths = rng.integers(3, 8, size=n)
            for x0, y0, ln in zip(xs, ys, lengths):
                img[y0 : y0 + ln, x0, :] += np.float32(0.18)
        if weather.noise_sigma > 0:
            img = img + rng.normal(0.0, weather.noise_sigma, size=img.shape).astype(np.float32)

    return np.clip(img, 0.0, 1.0).astype(np.float32)


def render(scene: SceneState, weathers: dict[int, WeatherParams]) -> np.ndarray:
    """Render a 64x64x3 float32 image in [0,1] for the scene's weather."""
    if scene.weather not in weathers:
        raise ConfigError(f"unknown weather id {scene.weather}")
    cls = render_classes(scene)
    return apply_weather_chain(cls, weathers[scene.weather], scene.rng_stream_id)
