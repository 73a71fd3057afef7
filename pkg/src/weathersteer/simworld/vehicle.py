"""Kinematic bicycle vehicle at fixed speed.

Integration is exact over a step (constant wheel angle traces a circular
arc), so constant-steering trajectories lie exactly on the analytic circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import NumericError

WHEELBASE = 2.5  # meters
MAX_WHEEL_ANGLE_RAD = math.radians(70.0)
SPEED = 5.0  # m/s, fixed throttle
DT = 0.1  # seconds per frame


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    heading: float  # radians, normalized to (-pi, pi]
    speed: float = SPEED


def normalize_angle(a: float) -> float:
    a = math.fmod(a, 2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a


def step(state: VehicleState, steering: float, dt: float = DT) -> VehicleState:
    """Advance one frame with normalized steering in [-1, 1]."""
    if not (isinstance(steering, (int, float)) and math.isfinite(steering)):
        raise NumericError(f"steering must be finite, got {steering!r}")
    if dt <= 0:
        raise NumericError(f"dt must be positive, got {dt}")
    s = min(1.0, max(-1.0, float(steering)))
    delta = s * MAX_WHEEL_ANGLE_RAD
    v = state.speed
    th = state.heading
    if abs(delta) < 1e-9:
        x = state.x + v * dt * math.cos(th)
        y = state.y + v * dt * math.sin(th)
        th2 = th
    else:
        omega = v * math.tan(delta) / WHEELBASE
        r = v / omega
        th2 = th + omega * dt
        x = state.x + r * (math.sin(th2) - math.sin(th))
        y = state.y + r * (math.cos(th) - math.cos(th2))
    return VehicleState(x, y, normalize_angle(th2), v)
