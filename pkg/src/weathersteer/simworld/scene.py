"""Ground-truth scene state: everything an image or label derives from."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .vehicle import VehicleState


@dataclass(frozen=True)
class SceneState:
    track_id: str
    vehicle: VehicleState
    weather: int
    rng_stream_id: int  # seeds per-frame stochastic effects (rain, noise)

    def with_weather(self, weather: int) -> "SceneState":
        return replace(self, weather=weather)
