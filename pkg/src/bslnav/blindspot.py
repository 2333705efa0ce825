"""Blind-spot boundary estimation and danger zones.

Two sources feed the blind-spots layer: range discontinuities in a planar
laser scan, and the nearest left/right clusters of a filtered depth-camera
point cloud. Each boundary becomes a danger zone whose center is pushed into
the occluded side by the shoulder-width term and whose radius is the robot
stopping distance plus a human stride plus an offset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .geom import Point2


@dataclass
class LaserScan:
    angle_min: float
    angle_increment: float
    max_range: float
    ranges: np.ndarray

    def __post_init__(self):
        self.ranges = np.asarray(self.ranges, dtype=float)

    @property
    def bearings(self) -> np.ndarray:
        return self.angle_min + self.angle_increment * np.arange(len(self.ranges))


@dataclass
class PointCloud:
    """Points in the robot-local frame (x forward, y left, z up), shape (N, 3)."""
    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)

    def __len__(self):
        return len(self.points)


@dataclass
class PointCluster:
    points: np.ndarray
    x_max: float = field(init=False)
    y_max: float = field(init=False)
    y_min: float = field(init=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if len(self.points) == 0:
            raise ValueError("cluster must be non-empty")
        self.x_max = float(self.points[:, 0].max())
        self.y_max = float(self.points[:, 1].max())
        self.y_min = float(self.points[:, 1].min())

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    @property
    def min_range(self) -> float:
        return float(np.hypot(self.points[:, 0], self.points[:, 1]).min())


@dataclass(frozen=True)
class BlindSpotBoundary:
    range: float
    bearing: float
    x: float
    y: float
    # +1: occluded region lies to the left of the boundary, -1: to the right.
    # None applies the shoulder-width shift with the sign of tan(bearing).
    side: Optional[int] = None

    @classmethod
    def from_polar(cls, rng: float, bearing: float, side: Optional[int] = None):
        return cls(rng, bearing, rng * math.cos(bearing), rng * math.sin(bearing), side)

    @classmethod
    def from_cartesian(cls, x: float, y: float, side: Optional[int] = None):
        return cls(math.hypot(x, y), math.atan2(y, x), x, y, side)


@dataclass
class StoppingModel:
    decel: float = -0.5
    human_stride: float = 0.8
    offset: float = 0.2
    shoulder_width: float = 0.5

    def __post_init__(self):
        if self.decel >= 0:
            raise ValueError("decel must be negative")
        if min(self.human_stride, self.offset, self.shoulder_width) < 0:
            raise ValueError("stride, offset and shoulder width must be non-negative")


@dataclass(frozen=True)
class DangerZone:
    center: Point2
    radius: float


@dataclass
class CloudPipelineConfig:
    voxel_size: float = 0.10
    z_min: float = 0.05
    z_max: float = 1.8
    cluster_tolerance: float = 0.30
    min_cluster_size: int = 5

    def __post_init__(self):
        if self.voxel_size <= 0 or self.cluster_tolerance <= 0 or self.min_cluster_size < 1:
            raise ValueError("cloud pipeline parameters must be positive")
        if not self.z_min < self.z_max:
            raise ValueError("z_min must be below z_max")


# ---------------------------------------------------------------------------
# laser path


def detect_bsbp_lrf(scan: LaserScan, z_th: float) -> list[BlindSpotBoundary]:
    """Boundaries at neighbouring beams whose ranges differ by more than ``z_th``.

    The nearer beam of each jump pair is the occluding corner; the occluded
    side is the one the near beam sits on.
    """
    if z_th <= 0:
        raise ValueError("z_th must be positive")
    z = scan.ranges
    if len(z) < 2:
        return []
    th = scan.bearings
    out = []
    for i in np.nonzero(np.abs(np.diff(z)) > z_th)[0]:
        near = i if z[i] < z[i + 1] else i + 1
        side = 1 if near == i + 1 else -1
        out.append(BlindSpotBoundary.from_polar(float(z[near]), float(th[near]), side))
    out.sort(key=lambda b: (b.bearing, b.side))
    return out


# ---------------------------------------------------------------------------
# danger zone geometry


def danger_center(b: BlindSpotBoundary, shoulder_width: float) -> Optional[Point2]:
    """Estimated nearest human position behind a boundary, or None if it is not ahead."""
    if abs(b.bearing) >= math.pi / 2:
        return None
    shift = shoulder_width * math.tan(b.bearing)
    if b.side is not None:
        shift = b.side * abs(shift)
    return Point2(b.x, b.y + shift)


def stopping_distance(v: float, decel: float) -> float:
    if decel >= 0:
        raise ValueError("deceleration must be negative")
    if v < 0:
        raise ValueError("speed must be non-negative")
    return -(v * v) / (2.0 * decel)


def danger_radius(x_mov: float, model: StoppingModel) -> float:
    if x_mov < 0:
        raise ValueError("stopping distance must be non-negative")
    return x_mov + model.human_stride + model.offset


def build_danger_zones(bsbps: Sequence[BlindSpotBoundary], v_current: float,
                       model: StoppingModel) -> list[DangerZone]:
    radius = danger_radius(stopping_distance(max(v_current, 0.0), model.decel), model)
    zones = []
    for b in bsbps:
        c = danger_center(b, model.shoulder_width)
        if c is not None:
            zones.append(DangerZone(c, radius))
    return zones


# ---------------------------------------------------------------------------
# point-cloud path


def voxel_filter(cloud: PointCloud, voxel_size: float) -> PointCloud:
    """Replace the points of every occupied voxel by their centroid."""
    if voxel_size <= 0:
        raise ValueError("voxel_size must be positive")
    pts = cloud.points
    if len(pts) == 0:
        return PointCloud(pts)
    keys = np.floor(pts / voxel_size).astype(np.int64)
    keys -= keys.min(axis=0)
    # flatten to one integer per voxel; row-major order keeps the lexicographic sort
    flat = np.ravel_multi_index(keys.T, tuple(keys.max(axis=0) + 1))
    _, inverse, counts = np.unique(flat, return_inverse=True, return_counts=True)
    sums = np.zeros((len(counts), 3))
    np.add.at(sums, inverse, pts)
    return PointCloud(sums / counts[:, None])


def passthrough_filter(cloud: PointCloud, z_min: float, z_max: float) -> PointCloud:
    if not z_min < z_max:
        raise ValueError("z_min must be below z_max")
    z = cloud.points[:, 2]
    return PointCloud(cloud.points[(z >= z_min) & (z <= z_max)])


def euclidean_cluster(cloud: PointCloud, tolerance: float, min_size: int) -> list[PointCluster]:
    """Connected components under ``dist <= tolerance``, nearest cluster first."""
    if tolerance <= 0 or min_size < 1:
        raise ValueError("tolerance must be positive and min_size at least 1")
    pts = cloud.points
    n = len(pts)
    if n == 0:
        return []
    pairs = cKDTree(pts).query_pairs(tolerance, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    clusters = []
    for lab in np.unique(labels):
        members = pts[labels == lab]
        if len(members) >= min_size:
            clusters.append(PointCluster(members))
    clusters.sort(key=lambda c: c.min_range)
    return clusters


def _range_truncated(c: PointCluster, max_range: float, margin: float, origins: np.ndarray) -> bool:
    """True if the forward end of ``c`` lies at the range limit of every sensor origin."""
    front = c.points[c.points[:, 0] >= c.x_max - margin]
    d = np.linalg.norm(front[:, None, :] - origins[None, :, :], axis=2).min(axis=1)
    return bool(d.max() >= max_range - margin)


def bsbp_from_clusters(clusters: Sequence[PointCluster], max_range: Optional[float] = None,
                       margin: float = 0.1, origins=None) -> list[BlindSpotBoundary]:
    """Boundary of the nearest cluster on each side of the robot.

    The boundary is the cluster's forward extreme in x and the midpoint of its
    y extremes. With ``max_range`` set, a side whose nearest cluster reaches
    the sensor range limit (measured from the nearest of ``origins``, default
    the local origin) yields nothing: its forward edge is a range cut, not an
    occluding corner.
    """
    origins = np.zeros((1, 3)) if origins is None else np.asarray(origins, dtype=float).reshape(-1, 3)
    out = []
    for side in (1, -1):
        own = [c for c in clusters if side * c.centroid[1] > 0]
        if not own:
            continue
        c = min(own, key=lambda k: k.min_range)
        if max_range is not None and _range_truncated(c, max_range, margin, origins):
            continue
        out.append(BlindSpotBoundary.from_cartesian(c.x_max, 0.5 * (c.y_max + c.y_min), side))
    return out


def cloud_bsbps(cloud: PointCloud, cfg: CloudPipelineConfig, max_range: Optional[float] = None,
                origins=None) -> list[BlindSpotBoundary]:
    """Voxel grid, ground pass-through, clustering, then per-side boundaries."""
    filtered = voxel_filter(cloud, cfg.voxel_size)
    filtered = passthrough_filter(filtered, cfg.z_min, cfg.z_max)
    clusters = euclidean_cluster(filtered, cfg.cluster_tolerance, cfg.min_cluster_size)
    return bsbp_from_clusters(clusters, max_range, 2.0 * cfg.voxel_size, origins)


def write_xyz(cloud: PointCloud, path) -> None:
    """ASCII debug dump, one ``x y z`` row per point."""
    with open(path, "w", newline="\n") as f:
        for x, y, z in cloud.points:
            f.write(f"{x:.6f} {y:.6f} {z:.6f}\n")
