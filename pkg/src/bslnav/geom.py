"""Frames, poses and small geometric primitives.

Global frame: origin at the robot's initial pose. Local frame: origin at the
wheel-axle center, x forward, y left, z up.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

PARALLEL_EPS = 1e-12


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.fmod(theta + math.pi, 2.0 * math.pi)
    if r <= 0.0:
        r += 2.0 * math.pi
    return r - math.pi


@dataclass(frozen=True)
class Pose2D:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))


class Point2(NamedTuple):
    x: float
    y: float


class Point3(NamedTuple):
    x: float
    y: float
    z: float


class PolarPoint(NamedTuple):
    range: float
    bearing: float


@dataclass(frozen=True)
class Segment2:
    a: Point2
    b: Point2

    def __post_init__(self):
        if self.a[0] == self.b[0] and self.a[1] == self.b[1]:
            raise ValueError("degenerate segment: a == b")


def polar_to_cartesian(p: PolarPoint) -> Point2:
    z, th = p
    return Point2(z * math.cos(th), z * math.sin(th))


def local_to_global(robot: Pose2D, p: Sequence[float]) -> Point2:
    c, s = math.cos(robot.theta), math.sin(robot.theta)
    return Point2(robot.x + c * p[0] - s * p[1], robot.y + s * p[0] + c * p[1])


def global_to_local(robot: Pose2D, p: Sequence[float]) -> Point2:
    c, s = math.cos(robot.theta), math.sin(robot.theta)
    dx, dy = p[0] - robot.x, p[1] - robot.y
    return Point2(c * dx + s * dy, -s * dx + c * dy)


def compose(robot: Pose2D, offset: Pose2D) -> Pose2D:
    """Pose of a frame mounted at ``offset`` in the robot frame, in the global frame."""
    x, y = local_to_global(robot, (offset.x, offset.y))
    return Pose2D(x, y, robot.theta + offset.theta)


def segments_array(segments: Sequence[Segment2]) -> np.ndarray:
    """Pack segments as an (M, 4) array of [ax, ay, bx, by]."""
    if len(segments) == 0:
        return np.zeros((0, 4))
    return np.array([[s.a[0], s.a[1], s.b[0], s.b[1]] for s in segments], dtype=float)


def ray_segment_distances(ox, oy, dx, dy, segs: np.ndarray) -> np.ndarray:
    """Hit distance of each ray against each segment, ``inf`` where there is no hit.

    Rays are given as broadcastable arrays with unit direction (dx, dy); the
    result has shape ``rays.shape + (M,)``. Hits at segment endpoints count.
    """
    ox, oy, dx, dy = (np.asarray(v, dtype=float)[..., None] for v in (ox, oy, dx, dy))
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    ex, ey = bx - ax, by - ay
    denom = dx * ey - dy * ex
    wx, wy = ax - ox, ay - oy
    parallel = np.abs(denom) < PARALLEL_EPS
    safe = np.where(parallel, 1.0, denom)
    t = (wx * ey - wy * ex) / safe
    s = (wx * dy - wy * dx) / safe
    hit = ~parallel & (t >= 0.0) & (s >= 0.0) & (s <= 1.0)
    return np.where(hit, t, np.inf)


def ray_circle_distances(ox, oy, dx, dy, cx: float, cy: float, radius: float) -> np.ndarray:
    """Distance along unit rays to the first crossing of a circle, ``inf`` if missed.

    Rays starting inside the circle report 0.
    """
    ox, oy, dx, dy = (np.asarray(v, dtype=float) for v in (ox, oy, dx, dy))
    fx, fy = ox - cx, oy - cy
    b = fx * dx + fy * dy
    c = fx * fx + fy * fy - radius * radius
    disc = b * b - c
    root = np.sqrt(np.maximum(disc, 0.0))
    t_near = -b - root
    t_far = -b + root
    t = np.where(c <= 0.0, 0.0, t_near)
    ok = (disc >= 0.0) & (t_far >= 0.0)
    return np.where(ok, t, np.inf)


def ray_cast(origin: Sequence[float], bearing: float, obstacles: Sequence[Segment2],
             max_range: float) -> float:
    """Distance to the nearest segment along a ray, capped at ``max_range``."""
    if max_range <= 0:
        raise ValueError("max_range must be positive")
    if len(obstacles) == 0:
        return float(max_range)
    d = ray_segment_distances(origin[0], origin[1], math.cos(bearing), math.sin(bearing),
                              segments_array(obstacles))
    return float(min(np.min(d), max_range))


def point_segment_distance(px, py, segs: np.ndarray) -> np.ndarray:
    """Euclidean distance from point(s) to each segment; shape ``p.shape + (M,)``."""
    px, py = np.asarray(px, dtype=float)[..., None], np.asarray(py, dtype=float)[..., None]
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    ex, ey = bx - ax, by - ay
    ll = ex * ex + ey * ey
    u = ((px - ax) * ex + (py - ay) * ey) / np.where(ll > 0, ll, 1.0)
    u = np.clip(u, 0.0, 1.0)
    qx, qy = ax + u * ex - px, ay + u * ey - py
    return np.hypot(qx, qy)


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_intersect(p1: Sequence[float], p2: Sequence[float],
                       q1: Sequence[float], q2: Sequence[float]) -> bool:
    """Closed segment-segment intersection test (touching counts)."""
    d1 = _orient(*q1, *q2, *p1)
    d2 = _orient(*q1, *q2, *p2)
    d3 = _orient(*p1, *p2, *q1)
    d4 = _orient(*p1, *p2, *q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True

    def on_seg(a, b, c, d):
        return d == 0 and min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) \
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    return (on_seg(q1, q2, p1, d1) or on_seg(q1, q2, p2, d2)
            or on_seg(p1, p2, q1, d3) or on_seg(p1, p2, q2, d4))
