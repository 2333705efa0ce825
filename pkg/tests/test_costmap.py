import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from bslnav.blindspot import DangerZone, LaserScan
from bslnav.costmap import (FREE, LETHAL, UNKNOWN, BslCostConfig, Costmap, InflationConfig,
                            LayerStack, OutOfBounds, compose_master, inflation_costs,
                            rasterize_boxes, traverse_beams, update_inflation_layer,
                            update_obstacle_layer, window_around, world_to_cell,
                            write_blind_spot_costs)
from bslnav.geom import Pose2D

from oracles import traversed_cells


def grid(w=40, h=40, res=0.05, ox=0.0, oy=0.0):
    return Costmap.empty(res, ox, oy, w, h)


def test_world_to_cell_examples():
    m = grid()
    assert world_to_cell(m, (0.0, 0.0)) == (0, 0)
    assert world_to_cell(m, (0.12, 0.26)) == (2, 5)
    with pytest.raises(OutOfBounds):
        world_to_cell(m, (-0.01, 0.0))
    with pytest.raises(OutOfBounds):
        world_to_cell(m, (2.0, 0.0))


def single_beam(r, max_range=4.0):
    return LaserScan(0.0, 0.01, max_range, np.array([r, r]))


def test_obstacle_single_hit():
    m = grid(60, 20, ox=-0.5, oy=-0.5)
    scan = LaserScan(0.0, 0.1, 4.0, np.array([1.0, 4.0]))
    update_obstacle_layer(m, scan, Pose2D(0.0, 0.0, 0.0))
    ex, ey = world_to_cell(m, (1.0, 0.0))
    assert m.cells[ey, ex] == LETHAL
    assert (m.cells == LETHAL).sum() == 1
    assert set(np.unique(m.cells)) <= {FREE, LETHAL}


def test_obstacle_max_range_only_clears():
    m = grid(60, 20, ox=-0.5, oy=-0.5)
    m.cells[:] = LETHAL
    update_obstacle_layer(m, single_beam(2.0, max_range=2.0), Pose2D(0.0, 0.0, 0.0))
    ox, oy = world_to_cell(m, (0.0, 0.0))
    row = m.cells[oy]
    ex, _ = world_to_cell(m, (2.0, 0.0))
    assert np.all(row[ox:ex] == FREE)
    assert row[ex] == LETHAL  # endpoint untouched


@given(st.lists(st.tuples(st.floats(0.01, 1.99), st.floats(0.01, 1.99),
                          st.floats(-0.5, 2.5), st.floats(-0.5, 2.5)), min_size=1, max_size=4))
def test_traverse_matches_slab_oracle(segs):
    m = grid(20, 20, res=0.1)
    x0, y0, x1, y1 = (np.array(v) for v in zip(*segs))
    beam, ix, iy = traverse_beams(m, x0, y0, x1, y1)
    for b, (a0, b0, a1, b1) in enumerate(segs):
        got = {(int(i), int(j)) for bb, i, j in zip(beam, ix, iy) if bb == b}
        want = traversed_cells(a0 / 0.1, b0 / 0.1, a1 / 0.1, b1 / 0.1, 1.0, 20, 20)
        assert got == want


@given(st.integers(0, 2**32 - 1))
def test_obstacle_layer_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    m = grid(24, 24, res=0.1)
    m.cells[:] = rng.choice([FREE, LETHAL, UNKNOWN], size=m.cells.shape)
    before = m.cells.copy()
    n = int(rng.integers(2, 12))
    origin = Pose2D(*rng.uniform(0.3, 2.1, 2), rng.uniform(-math.pi, math.pi))
    max_range = 1.5
    ranges = np.where(rng.random(n) < 0.3, max_range, rng.uniform(0.05, max_range, n))
    scan = LaserScan(-1.0, 2.0 / (n - 1), max_range, ranges)
    update_obstacle_layer(m, scan, origin)

    want = before.copy()
    ends = []
    for k, r in enumerate(ranges):
        b = origin.theta + scan.angle_min + k * scan.angle_increment
        ex, ey = origin.x + r * math.cos(b), origin.y + r * math.sin(b)
        end = (math.floor(ex / 0.1), math.floor(ey / 0.1))
        for c in traversed_cells(origin.x / 0.1, origin.y / 0.1, ex / 0.1, ey / 0.1, 1.0, 24, 24):
            if c != end:
                want[c[1], c[0]] = FREE
        ends.append((end, r < max_range))
    for (i, j), hit in ends:
        if hit and 0 <= i < 24 and 0 <= j < 24:
            want[j, i] = LETHAL
    assert np.array_equal(m.cells, want)


def test_inflation_examples():
    cfg = InflationConfig(0.2, 0.5, 1.0)
    assert inflation_costs(np.array([0.0]), cfg)[0] == LETHAL
    assert inflation_costs(np.array([0.2]), cfg)[0] == 253
    assert inflation_costs(np.array([0.3]), cfg)[0] == math.floor(253 * math.exp(-0.1))
    assert inflation_costs(np.array([0.51]), cfg)[0] == 0
    with pytest.raises(ValueError):
        InflationConfig(0.5, 0.2)


@given(st.lists(st.floats(0, 3), min_size=2, max_size=30))
def test_inflation_monotone(ds):
    cfg = InflationConfig(0.25, 0.6, 1.0)
    d = np.sort(np.array(ds))
    c = inflation_costs(d, cfg).astype(int)
    assert np.all(np.diff(c) <= 0)


@given(st.integers(0, 2**32 - 1))
def test_inflation_layer_brute_force(seed):
    rng = np.random.default_rng(seed)
    src = grid(15, 12, res=0.1)
    src.cells[rng.random(src.cells.shape) < 0.05] = LETHAL
    layer = src.like()
    cfg = InflationConfig(0.2, 0.45, 2.0)
    update_inflation_layer(layer, src, cfg)
    lethal = np.argwhere(src.cells == LETHAL)
    for (j, i), v in np.ndenumerate(layer.cells):
        d = min((math.hypot(i - b, j - a) * 0.1 for a, b in lethal), default=math.inf)
        assert v == inflation_costs(np.array([d]), cfg)[0]


def test_bsl_examples():
    m = grid(60, 60, ox=-1.5, oy=-1.5)
    cfg = BslCostConfig(253.0, 1.0)
    write_blind_spot_costs(m, [DangerZone((0.025, 0.025), 1.2)], cfg)
    ix, iy = world_to_cell(m, (0.025, 0.025))
    assert m.cells[iy, ix] == 253
    jx, jy = world_to_cell(m, (1.025, 0.025))
    assert m.cells[jy, jx] == 93
    kx, ky = world_to_cell(m, (1.3, 0.025))
    assert m.cells[ky, kx] == 0  # beyond the radius: untouched


def test_bsl_zone_center_cell_is_full_cost():
    m = grid(60, 60, ox=-1.5, oy=-1.5)
    write_blind_spot_costs(m, [DangerZone((0.013, -0.047), 1.0)], BslCostConfig())
    ix, iy = world_to_cell(m, (0.013, -0.047))
    assert m.cells[iy, ix] == 253
    assert m.cells.max() == 253


def test_bsl_keeps_higher_existing():
    m = grid(20, 20)
    m.cells[:] = 200
    write_blind_spot_costs(m, [DangerZone((0.525, 0.525), 0.5)], BslCostConfig())
    assert m.cells.min() == 200 and m.cells.max() == 253
    with pytest.raises(ValueError):
        write_blind_spot_costs(m, [DangerZone((0, 0), -1.0)], BslCostConfig())


cell_center = st.integers(5, 34).map(lambda i: (i + 0.5) * 0.05)


@given(cell_center, cell_center, st.floats(0.0, 1.5))
def test_bsl_radially_non_increasing(cx, cy, r):
    m = grid()
    write_blind_spot_costs(m, [DangerZone((cx, cy), r)], BslCostConfig())
    xs, ys = m.cell_centers()
    d = np.hypot(xs - cx, ys - cy).ravel()
    v = m.cells.ravel().astype(int)
    order = np.argsort(d, kind="stable")
    d, v = d[order], v[order]
    inside = d <= r + 1e-9
    assert np.all(np.diff(v[inside]) <= 0)
    assert np.all(v[~inside] == 0)


@given(st.lists(st.tuples(st.floats(0, 2), st.floats(0, 2), st.floats(0, 1.2)),
                min_size=2, max_size=4))
def test_bsl_overlap_dominates_singles(zones):
    cfg = BslCostConfig()
    both = grid()
    write_blind_spot_costs(both, [DangerZone((x, y), r) for x, y, r in zones], cfg)
    for x, y, r in zones:
        one = grid()
        write_blind_spot_costs(one, [DangerZone((x, y), r)], cfg)
        assert np.all(both.cells >= one.cells)


def stack_of(*layers):
    return LayerStack(*(Costmap(0.05, 0, 0, c) for c in layers))


def test_compose_examples():
    z = np.zeros((3, 3), dtype=np.uint8)
    assert compose_master(stack_of(z, z, z, z)).cells.max() == 0
    a = z.copy()
    a[1, 1] = LETHAL
    assert compose_master(stack_of(z, a, z, z)).cells[1, 1] == LETHAL
    b, c = z.copy(), z.copy()
    b[0, 0], c[0, 0] = 10, 93
    assert compose_master(stack_of(b, z, z, c)).cells[0, 0] == 93
    u = z.copy()
    u[2, 2] = UNKNOWN
    assert compose_master(stack_of(u, z, z, z)).cells[2, 2] == LETHAL


def test_compose_disabled_bsl_ignored():
    z = np.zeros((3, 3), dtype=np.uint8)
    b = np.full((3, 3), 93, dtype=np.uint8)
    st_ = stack_of(z, z, z, b)
    st_.bsl_enabled = False
    assert compose_master(st_).cells.max() == 0


def test_layers_must_be_congruent():
    with pytest.raises(ValueError):
        LayerStack(grid(3, 3), grid(3, 4), grid(3, 3), grid(3, 3))


layer = arrays(np.uint8, (5, 6))


@given(layer, layer, layer, layer, st.permutations(range(4)))
def test_compose_order_independent_and_idempotent(a, b, c, d, perm):
    layers = [a, b, c, d]
    m1 = compose_master(stack_of(*layers)).cells
    m2 = compose_master(stack_of(*[layers[i] for i in perm])).cells
    assert np.array_equal(m1, m2)
    m3 = compose_master(stack_of(m1, m1, m1, m1)).cells
    assert np.array_equal(m1, m3)


def test_window_pads_unknown_and_keeps_alignment():
    full = grid(20, 20, res=0.1)
    full.cells[0, 0] = LETHAL
    w = window_around(full, (0.05, 0.05), 1.0)
    assert w.width == w.height == 10
    assert w.lookup(np.array([0.05]), np.array([0.05]))[0] == LETHAL
    assert w.lookup(np.array([-0.05]), np.array([0.05]))[0] == UNKNOWN


def test_rasterize_boxes_cell_centers():
    class B:
        x, y, w, h = 0.2, 0.2, 0.2, 0.1
    m = rasterize_boxes(0.1, (0, 0, 1, 1), [B])
    assert (m.cells == LETHAL).sum() == 2
    assert m.cells[2, 2] == LETHAL and m.cells[2, 3] == LETHAL
