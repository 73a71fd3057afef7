"""Closed-loop track geometry built from straight and arc segments.

Tracks are dense closed polylines with arclength bookkeeping, nearest-point
queries, and a rasterized lateral-distance field used by the renderer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..errors import ConfigError

LANE_WIDTH = 4.0  # meters, full drivable width
WAYPOINT_SPACING = 0.25  # meters
FIELD_RES = 0.25  # meters per distance-field cell
FIELD_MARGIN = 30.0  # meters beyond the waypoint bounding box

TRACK_IDS = ("TrackA", "TrackB")


@dataclass(frozen=True)
class TurnSpec:
    """One curve of the track plus the episode entry pose just before it."""

    index: int
    entry_position: tuple[float, float]
    entry_heading: float
    direction: int  # +1 left, -1 right
    radius: float
    angle_deg: float
    arc_start_s: float


@dataclass
class Track:
    track_id: str
    waypoints: np.ndarray  # (n, 2) float64, closed loop (wraps implicitly)
    lane_width: float
    turns: list[TurnSpec]
    cum_s: np.ndarray = field(init=False)
    length: float = field(init=False)

    def __post_init__(self):
        pts = self.waypoints
        seg = np.diff(np.vstack([pts, pts[:1]]), axis=0)
        seglen = np.hypot(seg[:, 0], seg[:, 1])
        self.cum_s = np.concatenate([[0.0], np.cumsum(seglen)])[:-1]
        self.length = float(np.sum(seglen))
        self._field_cache = None

    # -- queries ----------------------------------------------------------

    def point_at(self, s: float) -> np.ndarray:
        s = float(s) % self.length
        i = int(np.searchsorted(self.cum_s, s, side="right")) - 1
        j = (i + 1) % len(self.waypoints)
        s0 = self.cum_s[i]
        seg = self.waypoints[j] - self.waypoints[i]
        seglen = np.hypot(*seg)
        t = (s - s0) / seglen if seglen > 0 else 0.0
        return self.waypoints[i] + t * seg

    def heading_at(self, s: float) -> float:
        s = float(s) % self.length
        i = int(np.searchsorted(self.cum_s, s, side="right")) - 1
        j = (i + 1) % len(self.waypoints)
        seg = self.waypoints[j] - self.waypoints[i]
        return float(np.arctan2(seg[1], seg[0]))

    def locate(self, position) -> tuple[float, float]:
        """Return (arclength s, signed lateral deviation) of the closest
        centerline point.  Deviation > 0 means left of travel direction."""
        p = np.asarray(position, dtype=np.float64)
        pts = self.waypoints
        n = len(pts)
        i = int(np.argmin(np.sum((pts - p) ** 2, axis=1)))
        best = None
        for a in (i - 1, i):
            b = (a + 1) % n
            a %= n
            seg = pts[b] - pts[a]
            seglen2 = float(seg @ seg)
            if seglen2 == 0.0:
                continue
            t = float(np.clip((p - pts[a]) @ seg / seglen2, 0.0, 1.0))
            foot = pts[a] + t * seg
            d2 = float(np.sum((p - foot) ** 2))
            if best is None or d2 < best[0]:
                seglen = np.sqrt(seglen2)
                s = self.cum_s[a] + t * seglen
                cross = (seg[0] * (p[1] - pts[a][1]) - seg[1] * (p[0] - pts[a][0])) / seglen
                best = (d2, s, float(cross))
        return best[1] % self.length, best[2]

    def mirrored(self) -> "Track":
        """The same track reflected across the x-axis (left/right swapped)."""
        pts = self.waypoints.copy()
        pts[:, 1] = -pts[:, 1]
        turns = [
            TurnSpec(t.index, (t.entry_position[0], -t.entry_position[1]),
                     -t.entry_heading, -t.direction, t.radius, t.angle_deg, t.arc_start_s)
            for t in self.turns
        ]
        return Track(self.track_id + "-mirror", pts, self.lane_width, turns)

    # -- rasterized field ---------------------------------------------------

    def distance_field(self):
        """(origin, res, dist_grid, s_grid): lateral distance to centerline and
        arclength of the nearest waypoint, on a uniform grid."""
        if self._field_cache is not None:
            return self._field_cache
        pts = self.waypoints
        lo = pts.min(axis=0) - FIELD_MARGIN
        hi = pts.max(axis=0) + FIELD_MARGIN
        nx = int(np.ceil((hi[0] - lo[0]) / FIELD_RES)) + 1
        ny = int(np.ceil((hi[1] - lo[1]) / FIELD_RES)) + 1
        xs = lo[0] + FIELD_RES * np.arange(nx)
        ys = lo[1] + FIELD_RES * np.arange(ny)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        tree = cKDTree(pts)
        dist, idx = tree.query(np.column_stack([gx.ravel(), gy.ravel()]), workers=1)
        dist_grid = dist.reshape(nx, ny).astype(np.float32)
        s_grid = self.cum_s[idx].reshape(nx, ny).astype(np.float32)
        self._field_cache = (lo, FIELD_RES, dist_grid, s_grid)
        return self._field_cache


# -- construction -----------------------------------------------------------


def _build_loop(track_id: str, radius: float, straights: list[float],
                directions: list[int], lane_width: float = LANE_WIDTH,
                lead: float = 10.0) -> Track:
    """Turtle-build a closed loop alternating straight, 90-degree arc."""
    assert len(straights) == len(directions) == 8
    pos = np.array([0.0, 0.0])
    heading = 0.0
    pts: list[np.ndarray] = []
    arc_starts: list[tuple[float, int]] = []  # (arclength at arc start, direction)
    s_total = 0.0
    for length, direction in zip(straights, directions):
        n = max(2, int(round(length / WAYPOINT_SPACING)))
        step = length / n
        d = np.array([np.cos(heading), np.sin(heading)])
        for k in range(n):
            pts.append(pos + k * step * d)
        pos = pos + length * d
        s_total += length
        arc_starts.append((s_total, direction))
        # quarter arc
        arclen = np.pi / 2 * radius
        m = max(2, int(round(arclen / WAYPOINT_SPACING)))
        center = pos + radius * np.array([-np.sin(heading), np.cos(heading)]) * direction
        phi0 = np.arctan2(pos[1] - center[1], pos[0] - center[0])
        for k in range(m):
            phi = phi0 + direction * (np.pi / 2) * k / m
            pts.append(center + radius * np.array([np.cos(phi), np.sin(phi)]))
        phi_end = phi0 + direction * np.pi / 2
        pos = center + radius * np.array([np.cos(phi_end), np.sin(phi_end)])
        heading = heading + direction * np.pi / 2
        s_total += arclen
    if np.hypot(*pos) > 1e-6:
        raise ConfigError(f"{track_id}: loop does not close (gap {np.hypot(*pos):.3f} m)")
    waypoints = np.asarray(pts)
    track = Track(track_id, waypoints, lane_width, [])
    turns = []
    for i, (s_arc, direction) in enumerate(arc_starts):
        s_entry = (s_arc - lead) % track.length
        p = track.point_at(s_entry)
        h = track.heading_at(s_entry)
        turns.append(TurnSpec(i, (float(p[0]), float(p[1])), h, direction, radius, 90.0, s_arc))
    track.turns = turns
    return track


_TRACKS: dict[str, Track] = {}


def get_track(track_id: str) -> Track:
    if track_id not in TRACK_IDS:
        raise ConfigError(f"unknown track id {track_id!r}")
    if track_id not in _TRACKS:
        if track_id == "TrackA":
            _TRACKS[track_id] = _build_loop(
                "TrackA", radius=20.0,
                straights=[170.0, 45.0, 30.0, 35.0, 30.0, 40.0, 30.0, 40.0],
                directions=[1, 1, -1, 1, 1, -1, 1, 1],
            )
        else:
            _TRACKS[track_id] = _build_loop(
                "TrackB", radius=15.0,
                straights=[145.0, 30.0, 20.0, 50.0, 40.0, 45.0, 25.0, 35.0],
                directions=[1, 1, -1, 1, 1, -1, 1, 1],
            )
    return _TRACKS[track_id]
