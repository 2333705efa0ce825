"""Ray-cast laser scanner and depth-camera models."""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..blindspot import LaserScan, PointCloud
from ..geom import Pose2D, compose, ray_circle_distances, ray_segment_distances
from .world import DepthCamSpec, LrfSpec, RobotSpec, WorldModel


def simulate_lrf(state, world: WorldModel, spec: LrfSpec, robot: Optional[RobotSpec] = None,
                 rng: Optional[np.random.Generator] = None, noise: float = 0.0) -> LaserScan:
    """Planar scan from the mounted laser against walls and the pedestrian disc."""
    mount = robot.lrf_mount if robot is not None else Pose2D()
    sensor = compose(state.pose, mount)
    angle_min = -spec.fov / 2.0
    inc = spec.fov / (spec.ray_count - 1)
    bearings = sensor.theta + angle_min + inc * np.arange(spec.ray_count)
    dx, dy = np.cos(bearings), np.sin(bearings)
    ranges = np.full(spec.ray_count, spec.max_range)
    if len(world.wall_array):
        d = ray_segment_distances(sensor.x, sensor.y, dx, dy, world.wall_array)
        ranges = np.minimum(ranges, d.min(axis=1))
    if world.dynamic is not None and state.ped is not None:
        d = ray_circle_distances(sensor.x, sensor.y, dx, dy, state.ped[0], state.ped[1],
                                 world.dynamic.radius)
        ranges = np.minimum(ranges, d)
    if noise > 0 and rng is not None:
        hit = ranges < spec.max_range
        ranges = np.where(hit, ranges + rng.uniform(-noise, noise, ranges.shape), ranges)
        ranges = np.minimum(ranges, spec.max_range)
    ranges = np.maximum(ranges, 1e-6)
    return LaserScan(angle_min, inc, spec.max_range, ranges)


def camera_rays(spec: DepthCamSpec, yaw: float) -> np.ndarray:
    """Unit ray directions (v_res * h_res, 3) in the robot frame for a yawed camera."""
    az = yaw + np.linspace(-spec.h_fov / 2, spec.h_fov / 2, spec.h_res)
    el = np.linspace(spec.v_fov / 2, -spec.v_fov / 2, spec.v_res)
    A, E = np.meshgrid(az, el)
    return np.stack([np.cos(E) * np.cos(A), np.cos(E) * np.sin(A), np.sin(E)], -1).reshape(-1, 3)


def _box_hits(o: np.ndarray, d: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Slab test of rays (R, 3) against boxes (B, 3); nearest entry distance per ray."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (lo[None, :, :] - o[None, None, :]) * inv[:, None, :]
        t2 = (hi[None, :, :] - o[None, None, :]) * inv[:, None, :]
    zero = d[:, None, :] == 0
    inside = (o[None, None, :] >= lo[None]) & (o[None, None, :] <= hi[None])
    tmin_ax = np.where(zero, np.where(inside, -np.inf, np.inf), np.minimum(t1, t2))
    tmax_ax = np.where(zero, np.where(inside, np.inf, -np.inf), np.maximum(t1, t2))
    tmin = tmin_ax.max(axis=2)
    tmax = tmax_ax.min(axis=2)
    hit = (tmax >= np.maximum(tmin, 0.0)) & np.isfinite(tmax)
    t = np.where(hit, np.maximum(tmin, 0.0), np.inf)
    return t.min(axis=1) if t.shape[1] else np.full(len(d), np.inf)


def _cylinder_hits(o, d, cx, cy, radius, height) -> np.ndarray:
    h = np.hypot(d[:, 0], d[:, 1])
    ok = h > 1e-12
    hx = np.where(ok, d[:, 0] / np.where(ok, h, 1.0), 1.0)
    hy = np.where(ok, d[:, 1] / np.where(ok, h, 1.0), 0.0)
    s = ray_circle_distances(o[0], o[1], hx, hy, cx, cy, radius)
    t = np.where(ok, s / np.where(ok, h, 1.0), np.inf)
    z = o[2] + t * d[:, 2]
    return np.where(np.isfinite(t) & (z >= 0.0) & (z <= height), t, np.inf)


def simulate_depth_cloud(state, world: WorldModel, spec: DepthCamSpec,
                         robot: Optional[RobotSpec] = None) -> PointCloud:
    """Depth returns of all mounted cameras, in the robot-local frame.

    Rays hit the floor (z = 0), the extruded boxes and the pedestrian
    cylinder; returns outside [min_range, max_range] are dropped.
    """
    robot = robot if robot is not None else RobotSpec()
    c, s = math.cos(state.pose.theta), math.sin(state.pose.theta)
    lo = np.array([[b.x, b.y, 0.0] for b in world.boxes]).reshape(-1, 3)
    hi = np.array([[b.x + b.w, b.y + b.h, b.height] for b in world.boxes]).reshape(-1, 3)
    # boxes beyond max_range cannot produce a kept return
    gap_x = np.maximum(np.maximum(lo[:, 0] - state.pose.x, state.pose.x - hi[:, 0]), 0.0)
    gap_y = np.maximum(np.maximum(lo[:, 1] - state.pose.y, state.pose.y - hi[:, 1]), 0.0)
    near = np.hypot(gap_x, gap_y) <= spec.max_range
    lo, hi = lo[near], hi[near]
    clouds = []
    for mount in robot.camera_mounts:
        local = camera_rays(spec, mount.yaw)
        d = np.column_stack([c * local[:, 0] - s * local[:, 1],
                             s * local[:, 0] + c * local[:, 1], local[:, 2]])
        o = np.array([state.pose.x, state.pose.y, mount.height])
        with np.errstate(divide="ignore"):
            t = np.where(d[:, 2] < 0, -o[2] / d[:, 2], np.inf)
        if len(lo):
            t = np.minimum(t, _box_hits(o, d, lo, hi))
        if world.dynamic is not None and state.ped is not None:
            t = np.minimum(t, _cylinder_hits(o, d, state.ped[0], state.ped[1],
                                             world.dynamic.radius, world.dynamic.height))
        keep = (t >= spec.min_range) & (t <= spec.max_range)
        pts = o[None, :] + t[keep, None] * d[keep]
        dx, dy = pts[:, 0] - state.pose.x, pts[:, 1] - state.pose.y
        clouds.append(np.column_stack([c * dx + s * dy, -s * dx + c * dy, pts[:, 2]]))
    return PointCloud(np.concatenate(clouds) if clouds else np.zeros((0, 3)))
