"""Layered 2D cost grid: static, obstacle, inflation and blind-spots layers.

Cost semantics follow the usual navigation convention: 0 free, 1-254 occupied
gradations (254 lethal), 255 unknown. Cells are stored row-major as
``cells[iy, ix]``; cell (0, 0) has its lower-left corner at the map origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

FREE = 0
LETHAL = 254
INSCRIBED_DECAY_MAX = 253
UNKNOWN = 255


class OutOfBounds(Exception):
    """A world point is not covered by the grid."""


@dataclass
class Costmap:
    resolution: float
    origin_x: float
    origin_y: float
    cells: np.ndarray

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=np.uint8)
        if self.cells.ndim != 2:
            raise ValueError("cells must be a 2D array")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")

    @classmethod
    def empty(cls, resolution: float, origin_x: float, origin_y: float, width: int, height: int,
              value: int = FREE) -> "Costmap":
        return cls(resolution, origin_x, origin_y, np.full((height, width), value, dtype=np.uint8))

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    def like(self, value: int = FREE) -> "Costmap":
        """Congruent map filled with ``value``."""
        return Costmap.empty(self.resolution, self.origin_x, self.origin_y,
                             self.width, self.height, value)

    def copy(self) -> "Costmap":
        return Costmap(self.resolution, self.origin_x, self.origin_y, self.cells.copy())

    def congruent(self, other: "Costmap") -> bool:
        return (self.cells.shape == other.cells.shape and self.resolution == other.resolution
                and self.origin_x == other.origin_x and self.origin_y == other.origin_y)

    def cell_center(self, ix, iy):
        return (self.origin_x + (np.asarray(ix) + 0.5) * self.resolution,
                self.origin_y + (np.asarray(iy) + 0.5) * self.resolution)

    def cell_centers(self):
        """Meshgrid of cell-center coordinates, each of shape (height, width)."""
        xs, ys = self.cell_center(np.arange(self.width), np.arange(self.height))
        return np.meshgrid(xs, ys)

    def to_grid(self, x, y):
        """Continuous grid coordinates (cell units)."""
        return ((np.asarray(x, dtype=float) - self.origin_x) / self.resolution,
                (np.asarray(y, dtype=float) - self.origin_y) / self.resolution)

    def lookup(self, x, y, outside: int = UNKNOWN) -> np.ndarray:
        """Vectorized cost lookup; points off the grid read as ``outside``."""
        gx, gy = self.to_grid(x, y)
        ix, iy = np.floor(gx).astype(np.int64), np.floor(gy).astype(np.int64)
        inside = (ix >= 0) & (iy >= 0) & (ix < self.width) & (iy < self.height)
        out = np.full(ix.shape, outside, dtype=np.int64)
        out[inside] = self.cells[iy[inside], ix[inside]]
        return out


def world_to_cell(costmap: Costmap, p: Sequence[float]) -> tuple[int, int]:
    gx, gy = costmap.to_grid(p[0], p[1])
    ix, iy = math.floor(gx), math.floor(gy)
    if ix < 0 or iy < 0 or ix >= costmap.width or iy >= costmap.height:
        raise OutOfBounds(f"point ({p[0]}, {p[1]}) is outside the grid")
    return ix, iy


@dataclass
class InflationConfig:
    inscribed_radius: float = 0.2
    inflation_radius: float = 0.5
    cost_scaling_factor: float = 1.0

    def __post_init__(self):
        if not 0 < self.inscribed_radius <= self.inflation_radius:
            raise ValueError("need 0 < inscribed_radius <= inflation_radius")


@dataclass
class BslCostConfig:
    max_cost: float = 253.0
    cost_scaling: float = 1.0


@dataclass
class LayerStack:
    static_layer: Costmap
    obstacle_layer: Costmap
    inflation_layer: Costmap
    bsl_layer: Costmap
    bsl_enabled: bool = True

    def __post_init__(self):
        for layer in (self.obstacle_layer, self.inflation_layer, self.bsl_layer):
            if not self.static_layer.congruent(layer):
                raise ValueError("layers must share resolution, origin and size")

    @classmethod
    def from_static(cls, static: Costmap, bsl_enabled: bool = True) -> "LayerStack":
        return cls(static, static.like(), static.like(), static.like(), bsl_enabled)

    def enabled_layers(self) -> list[Costmap]:
        layers = [self.static_layer, self.obstacle_layer, self.inflation_layer]
        if self.bsl_enabled:
            layers.append(self.bsl_layer)
        return layers


# ---------------------------------------------------------------------------
# beam traversal


def _clip_to_box(gx0, gy0, dx, dy, w, h):
    """Liang-Barsky clip of g0 + t*d, t in [0, 1], against [0, w] x [0, h]."""
    t0 = np.zeros_like(gx0)
    t1 = np.ones_like(gx0)
    ok = np.ones(gx0.shape, dtype=bool)
    for p, q in ((-dx, gx0), (dx, w - gx0), (-dy, gy0), (dy, h - gy0)):
        zero = p == 0
        ok &= ~(zero & (q < 0))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(zero, 0.0, q / np.where(zero, 1.0, p))
        t0 = np.where(~zero & (p < 0), np.maximum(t0, r), t0)
        t1 = np.where(~zero & (p > 0), np.minimum(t1, r), t1)
    return t0, t1, ok & (t0 < t1)


def _line_crossings(g0, d, t0, t1, k):
    """Parameters where g0 + t*d crosses integer grid lines, inf-padded to k columns."""
    steps = np.arange(1, k + 1)[None, :]
    base = np.where(d[:, None] > 0, np.floor(g0)[:, None] + steps, np.ceil(g0)[:, None] - steps)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (base - g0[:, None]) / d[:, None]
    valid = (d[:, None] != 0) & (t > t0[:, None]) & (t < t1[:, None])
    return np.where(valid, t, np.inf)


def traverse_beams(costmap: Costmap, x0, y0, x1, y1):
    """Cells crossed with positive length by each segment (x0, y0)-(x1, y1).

    Segments are truncated at the grid boundary. Returns flat arrays
    ``(beam, ix, iy)`` listing every crossed cell in order along each beam.
    """
    gx0, gy0 = costmap.to_grid(np.atleast_1d(x0), np.atleast_1d(y0))
    gx1, gy1 = costmap.to_grid(np.atleast_1d(x1), np.atleast_1d(y1))
    dx, dy = gx1 - gx0, gy1 - gy0
    t0, t1, ok = _clip_to_box(gx0, gy0, dx, dy, costmap.width, costmap.height)
    empty = np.zeros(0, dtype=np.int64)
    if not ok.any():
        return empty, empty, empty
    idx = np.nonzero(ok)[0]
    gx0, gy0, dx, dy, t0, t1 = gx0[idx], gy0[idx], dx[idx], dy[idx], t0[idx], t1[idx]
    kx = int(np.max(np.abs(dx))) + 2
    ky = int(np.max(np.abs(dy))) + 2
    ts = np.concatenate([t0[:, None], _line_crossings(gx0, dx, t0, t1, kx),
                         _line_crossings(gy0, dy, t0, t1, ky), t1[:, None]], axis=1)
    ts.sort(axis=1)
    lo, hi = ts[:, :-1], ts[:, 1:]
    with np.errstate(invalid="ignore"):
        valid = np.isfinite(hi) & (hi - lo > 1e-12)
    mid = np.where(valid, 0.5 * (lo + np.where(valid, hi, lo)), 0.0)
    ix = np.floor(gx0[:, None] + mid * dx[:, None]).astype(np.int64)
    iy = np.floor(gy0[:, None] + mid * dy[:, None]).astype(np.int64)
    beam = np.broadcast_to(idx[:, None], ix.shape)
    valid &= (ix >= 0) & (iy >= 0) & (ix < costmap.width) & (iy < costmap.height)
    return beam[valid], ix[valid], iy[valid]


def update_obstacle_layer(layer: Costmap, scan, origin) -> None:
    """Clear cells along each beam and mark genuine hit endpoints lethal.

    ``origin`` is the pose of the scan origin in the map frame. Clearing is
    applied before marking, so a hit is never erased by a neighbouring beam.
    """
    ranges = np.minimum(np.asarray(scan.ranges, dtype=float), scan.max_range)
    bearings = origin.theta + scan.angle_min + scan.angle_increment * np.arange(len(ranges))
    ex = origin.x + ranges * np.cos(bearings)
    ey = origin.y + ranges * np.sin(bearings)
    n = len(ranges)
    beam, ix, iy = traverse_beams(layer, np.full(n, origin.x), np.full(n, origin.y), ex, ey)

    gx, gy = layer.to_grid(ex, ey)
    end_ix, end_iy = np.floor(gx).astype(np.int64), np.floor(gy).astype(np.int64)
    end_inside = (end_ix >= 0) & (end_iy >= 0) & (end_ix < layer.width) & (end_iy < layer.height)

    is_end = end_inside[beam] & (ix == end_ix[beam]) & (iy == end_iy[beam])
    layer.cells[iy[~is_end], ix[~is_end]] = FREE

    hit = end_inside & (ranges < scan.max_range)
    layer.cells[end_iy[hit], end_ix[hit]] = LETHAL


def inflation_costs(distance: np.ndarray, cfg: InflationConfig) -> np.ndarray:
    """Inflation cost as a function of distance to the nearest lethal cell."""
    eps = 1e-9
    d = np.asarray(distance, dtype=float)
    decay = np.floor(INSCRIBED_DECAY_MAX * np.exp(
        -cfg.cost_scaling_factor * np.maximum(d - cfg.inscribed_radius, 0.0)))
    out = np.where(d <= cfg.inflation_radius + eps, decay, 0.0)
    out = np.where(d < cfg.inscribed_radius - eps, LETHAL, out)
    return out.astype(np.uint8)


def update_inflation_layer(layer: Costmap, obstacle_layer: Costmap, cfg: InflationConfig) -> None:
    """Inflate every lethal cell of ``obstacle_layer`` into ``layer``."""
    if not layer.congruent(obstacle_layer):
        raise ValueError("inflation and source layers must be congruent")
    lethal = obstacle_layer.cells == LETHAL
    if not lethal.any():
        layer.cells[:] = FREE
        return
    dist = ndimage.distance_transform_edt(~lethal, sampling=layer.resolution)
    layer.cells[:] = inflation_costs(dist, cfg)


def write_blind_spot_costs(layer: Costmap, zones: Iterable, cfg: BslCostConfig) -> None:
    """Propagate exponentially decaying cost circles around danger-zone centers.

    Each cell whose center lies within a zone radius gets
    ``max(existing, floor(max_cost * exp(-cost_scaling * l)))`` where ``l`` is
    the distance to the zone center. A center inside the grid is taken at the
    center of its cell, so that cell carries the full ``max_cost``.
    """
    cx, cy = None, None
    res = layer.resolution
    h, w = layer.cells.shape
    for zone in zones:
        if zone.radius < 0:
            raise ValueError("zone radius must be non-negative")
        if cx is None:
            cx, cy = layer.cell_centers()
        px, py = float(zone.center[0]), float(zone.center[1])
        ix = math.floor((px - layer.origin_x) / res)
        iy = math.floor((py - layer.origin_y) / res)
        if 0 <= ix < w and 0 <= iy < h:
            px = layer.origin_x + (ix + 0.5) * res
            py = layer.origin_y + (iy + 0.5) * res
        l = np.hypot(cx - px, cy - py)
        inside = l <= zone.radius
        if not inside.any():
            continue
        cand = np.floor(cfg.max_cost * np.exp(-cfg.cost_scaling * l[inside]))
        cand = np.clip(cand, 0, UNKNOWN).astype(np.uint8)
        layer.cells[inside] = np.maximum(layer.cells[inside], cand)


def compose_master(stack: LayerStack) -> Costmap:
    """Per-cell maximum over enabled layers; unknown is treated as lethal."""
    layers = stack.enabled_layers()
    cells = layers[0].cells.copy()
    for layer in layers[1:]:
        np.maximum(cells, layer.cells, out=cells)
    cells[cells == UNKNOWN] = LETHAL
    base = layers[0]
    return Costmap(base.resolution, base.origin_x, base.origin_y, cells)


# ---------------------------------------------------------------------------
# windows and rasterization


def window_around(full: Costmap, center: Sequence[float], size: float,
                  outside: int = UNKNOWN) -> Costmap:
    """Square crop of ``full`` centered near ``center`` and snapped to its grid.

    Parts of the window beyond ``full`` read as ``outside``.
    """
    n = int(round(size / full.resolution))
    gx, gy = full.to_grid(center[0], center[1])
    ix0 = int(math.floor(gx)) - n // 2
    iy0 = int(math.floor(gy)) - n // 2
    cells = np.full((n, n), outside, dtype=np.uint8)
    sx0, sy0 = max(ix0, 0), max(iy0, 0)
    sx1, sy1 = min(ix0 + n, full.width), min(iy0 + n, full.height)
    if sx0 < sx1 and sy0 < sy1:
        cells[sy0 - iy0:sy1 - iy0, sx0 - ix0:sx1 - ix0] = full.cells[sy0:sy1, sx0:sx1]
    return Costmap(full.resolution, full.origin_x + ix0 * full.resolution,
                   full.origin_y + iy0 * full.resolution, cells)


def rasterize_boxes(resolution: float, bounds: Sequence[float], boxes) -> Costmap:
    """Static layer with every cell whose center lies in a box set lethal.

    ``bounds`` is (xmin, ymin, xmax, ymax); boxes expose ``x, y, w, h`` with
    (x, y) the lower-left corner.
    """
    xmin, ymin, xmax, ymax = bounds
    width = int(math.ceil((xmax - xmin) / resolution - 1e-9))
    height = int(math.ceil((ymax - ymin) / resolution - 1e-9))
    cmap = Costmap.empty(resolution, xmin, ymin, width, height)
    xs, ys = cmap.cell_center(np.arange(width), np.arange(height))
    for b in boxes:
        cols = (xs >= b.x) & (xs <= b.x + b.w)
        rows = (ys >= b.y) & (ys <= b.y + b.h)
        cmap.cells[np.ix_(rows, cols)] = LETHAL
    return cmap


def global_costmap(static: Costmap, cfg: InflationConfig, scan=None, origin=None) -> Costmap:
    """Static layer plus its inflation, as consumed by the global planner.

    With ``scan`` and ``origin`` given, the scan's hits are marked in an
    obstacle layer first and inflated together with the static layer.
    """
    obstacles = static.like()
    if scan is not None:
        update_obstacle_layer(obstacles, scan, origin)
    source = static.copy()
    np.maximum(source.cells, obstacles.cells, out=source.cells)
    inflation = static.like()
    update_inflation_layer(inflation, source, cfg)
    stack = LayerStack(static, obstacles, inflation, static.like(), bsl_enabled=False)
    return compose_master(stack)

