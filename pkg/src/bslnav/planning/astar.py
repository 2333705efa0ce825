"""8-connected A* over a composed costmap."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..costmap import LETHAL, Costmap, OutOfBounds, world_to_cell

SQRT2 = math.sqrt(2.0)
NEIGHBOURS = ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
              (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2))


class NoPath(Exception):
    pass


class InvalidEndpoint(Exception):
    pass


@dataclass
class GlobalPath:
    waypoints: np.ndarray  # (K, 2) world coordinates, start to goal
    length: float
    cost: float  # graph cost the search minimized

    def __len__(self):
        return len(self.waypoints)


def edge_multipliers(master: Costmap, cost_penalty: float) -> np.ndarray:
    return 1.0 + master.cells.astype(float) / LETHAL * cost_penalty


def _endpoint(master: Costmap, p, what: str) -> tuple[int, int]:
    try:
        ix, iy = world_to_cell(master, p)
    except OutOfBounds as exc:
        raise InvalidEndpoint(f"{what} is outside the map") from exc
    if master.cells[iy, ix] >= LETHAL:
        raise InvalidEndpoint(f"{what} lies on a lethal cell")
    return ix, iy


def astar_plan(master: Costmap, start: Sequence[float], goal: Sequence[float],
               cost_penalty: float = 1.0) -> GlobalPath:
    """Cheapest 8-connected cell path from ``start`` to ``goal``.

    Entering a cell of cost c along a step of length s costs
    ``s * (1 + c / 254 * cost_penalty)``; cells at 254 or above are blocked.
    """
    sx, sy = _endpoint(master, start, "start")
    gx, gy = _endpoint(master, goal, "goal")
    w, h = master.width, master.height
    res = master.resolution
    mult = edge_multipliers(master, cost_penalty).ravel().tolist()
    blocked = (master.cells >= LETHAL).ravel().tolist()

    def heuristic(ix, iy):
        dx, dy = abs(ix - gx), abs(iy - gy)
        return res * (max(dx, dy) + (SQRT2 - 1.0) * min(dx, dy))

    start_i, goal_i = sy * w + sx, gy * w + gx
    g = {start_i: 0.0}
    parent = {start_i: -1}
    closed = bytearray(w * h)
    heap = [(heuristic(sx, sy), 0.0, start_i)]
    while heap:
        _, _, node = heapq.heappop(heap)
        if closed[node]:
            continue
        gcost = g[node]
        closed[node] = 1
        if node == goal_i:
            break
        iy, ix = divmod(node, w)
        for dx, dy, step in NEIGHBOURS:
            nx, ny = ix + dx, iy + dy
            if nx < 0 or ny < 0 or nx >= w or ny >= h:
                continue
            nb = ny * w + nx
            if closed[nb] or blocked[nb]:
                continue
            ng = gcost + step * res * mult[nb]
            if ng < g.get(nb, math.inf):
                g[nb] = ng
                parent[nb] = node
                hn = heuristic(nx, ny)
                heapq.heappush(heap, (ng + hn, hn, nb))
    if not closed[goal_i]:
        raise NoPath("goal is unreachable")

    nodes = []
    node = goal_i
    while node != -1:
        nodes.append(node)
        node = parent[node]
    nodes.reverse()
    iy, ix = np.divmod(np.array(nodes), w)
    xs, ys = master.cell_center(ix, iy)
    pts = np.column_stack([xs, ys])
    length = float(np.sum(np.hypot(*np.diff(pts, axis=0).T))) if len(pts) > 1 else 0.0
    return GlobalPath(pts, length, g[goal_i])
