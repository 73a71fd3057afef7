"""Pure-pursuit expert: straight/arc oracles, symmetry, weather independence."""

import math

import pytest

from weathersteer.errors import OffTrackError
from weathersteer.simworld import (
    MAX_WHEEL_ANGLE_RAD,
    WHEELBASE,
    SceneState,
    VehicleState,
    expert_steering,
    get_track,
)
from weathersteer.simworld.expert import expert_steering_state


def test_straight_on_centerline_steers_zero():
    track = get_track("TrackA")
    s = 50.0  # middle of the 170 m opening straight; lookahead stays on it
    p = track.point_at(s)
    h = track.heading_at(s)
    assert expert_steering_state(track, float(p[0]), float(p[1]), h) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("track_id,radius", [("TrackA", 20.0), ("TrackB", 15.0)])
def test_arc_curvature_matches_turn_radius(track_id, radius):
    # on a circular arc pure pursuit recovers curvature 1/R, so the wheel
    # angle is atan(WHEELBASE / R) up to waypoint-chord discretization
    track = get_track(track_id)
    turn = track.turns[1]
    arc_mid = turn.arc_start_s + (math.pi / 2 * radius) * 0.4
    p = track.point_at(arc_mid)
    h = track.heading_at(arc_mid)
    steer = expert_steering_state(track, float(p[0]), float(p[1]), h)
    expected = turn.direction * math.atan(WHEELBASE / radius) / MAX_WHEEL_ANGLE_RAD
    assert steer == pytest.approx(expected, rel=0.05)


def test_mirror_antisymmetry_is_exact():
    track = get_track("TrackB")
    mir = track.mirrored()
    turn = track.turns[2]
    x, y = turn.entry_position
    h = turn.entry_heading
    a = expert_steering_state(track, x, y + 0.8, h)
    b = expert_steering_state(mir, x, -(y + 0.8), -h)
    assert b == -a


def test_off_track_raises():
    track = get_track("TrackA")
    p = track.point_at(30.0)
    h = track.heading_at(30.0)
    off = 3.0 * track.lane_width
    with pytest.raises(OffTrackError):
        expert_steering_state(track, float(p[0]) - off * math.sin(h),
                              float(p[1]) + off * math.cos(h), h)


def test_weather_independent():
    track = get_track("TrackA")
    turn = track.turns[0]
    v = VehicleState(*turn.entry_position, turn.entry_heading)
    outs = {expert_steering(SceneState("TrackA", v, w, 7)) for w in (0, 5, 12)}
    assert len(outs) == 1


def test_recovers_from_lateral_offset():
    # steering pushes back toward the centerline from either side
    track = get_track("TrackA")
    s = 60.0
    p = track.point_at(s)
    h = track.heading_at(s)
    left = expert_steering_state(track, float(p[0]) - 1.5 * math.sin(h),
                                 float(p[1]) + 1.5 * math.cos(h), h)
    right = expert_steering_state(track, float(p[0]) + 1.5 * math.sin(h),
                                  float(p[1]) - 1.5 * math.cos(h), h)
    assert left < 0 < right
