"""Pure-pursuit lane-keeping expert driving on ground-truth geometry."""

from __future__ import annotations

import math

from ..errors import OffTrackError
from .scene import SceneState
from .track import Track, get_track
from .vehicle import MAX_WHEEL_ANGLE_RAD, WHEELBASE

LOOKAHEAD = 6.0  # meters along the centerline


def expert_steering_state(track: Track, x: float, y: float, heading: float) -> float:
    s, dev = track.locate((x, y))
    if abs(dev) > 2.0 * track.lane_width:
        raise OffTrackError(
            f"vehicle {abs(dev):.1f} m from centerline exceeds recovery band"
        )
    target = track.point_at(s + LOOKAHEAD)
    dx = float(target[0]) - x
    dy = float(target[1]) - y
    chord = math.hypot(dx, dy)
    alpha = math.atan2(dy, dx) - heading
    # curvature of the arc through the vehicle and the lookahead point
    kappa = 2.0 * math.sin(alpha) / chord
    delta = math.atan(WHEELBASE * kappa)
    return min(1.0, max(-1.0, delta / MAX_WHEEL_ANGLE_RAD))


def expert_steering(scene: SceneState) -> float:
    """Normalized steering in [-1, 1]; independent of the weather field."""
    track = get_track(scene.track_id)
    v = scene.vehicle
    return expert_steering_state(track, v.x, v.y, v.heading)
