"""Closed-loop turn episodes: render -> policy -> step, with in-lane records."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import NumericError
from .render import render
from .scene import SceneState
from .track import Track, TurnSpec
from .vehicle import DT, VehicleState, step
from .weather import WeatherParams

EPISODE_FRAMES = 120

Policy = Callable[[np.ndarray], float]

# Sentinel policy: drive with the state-based pure-pursuit expert, bypassing
# images entirely (no rendering).
EXPERT = "expert"


def stream_id(seed: int, weather: int, turn: int, frame: int) -> int:
    """Deterministic 63-bit per-frame stream id."""
    h = (seed & (2**64 - 1)) or 1
    for k in (weather + 1, turn + 1, frame + 1):
        h = (h ^ (k * 0x9E3779B97F4A7C15)) * 0xBF58476D1CE4E5B9 % 2**64
    return h % 2**63


@dataclass(frozen=True)
class FrameRecord:
    frame: int
    deviation: float  # signed lateral offset from lane center, meters
    in_lane: bool
    steering: float


@dataclass(frozen=True)
class InLaneRecord:
    track_id: str
    turn: int
    weather: int
    frames: list[FrameRecord]

    @property
    def in_lane_pct(self) -> float:
        return 100.0 * sum(f.in_lane for f in self.frames) / len(self.frames)


def run_episode(track: Track, turn: TurnSpec, weather: int, policy: Policy,
                weathers: dict[int, WeatherParams], frames: int = EPISODE_FRAMES,
                seed: int = 0) -> InLaneRecord:
    """Drive `frames` frames starting just before the turn."""
    state = VehicleState(turn.entry_position[0], turn.entry_position[1], turn.entry_heading)
    half = track.lane_width / 2.0
    records: list[FrameRecord] = []
    for k in range(frames):
        scene = SceneState(track.track_id, state, weather,
                           stream_id(seed, weather, turn.index, k))
        if policy is EXPERT:
            from .expert import expert_steering

            steering = expert_steering(scene)
        else:
            image = render(scene, weathers)
            steering = float(policy(image))
        if not math.isfinite(steering):
            raise NumericError(f"policy returned non-finite steering at frame {k}")
        _, dev = track.locate((state.x, state.y))
        records.append(FrameRecord(k, dev, abs(dev) < half, steering))
        state = step(state, steering, DT)
    return InLaneRecord(track.track_id, turn.index, weather, records)
