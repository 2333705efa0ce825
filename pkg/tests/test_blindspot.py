import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from bslnav.blindspot import (BlindSpotBoundary, CloudPipelineConfig, LaserScan, PointCloud,
                              PointCluster, StoppingModel, bsbp_from_clusters, build_danger_zones,
                              cloud_bsbps, danger_center, danger_radius, detect_bsbp_lrf,
                              euclidean_cluster, passthrough_filter, stopping_distance,
                              voxel_filter, write_xyz)

from oracles import union_find_partition, voxel_buckets

MODEL = StoppingModel(-0.5, 0.8, 0.2, 0.5)


def scan_of(ranges, fov=math.pi):
    n = len(ranges)
    return LaserScan(-fov / 2, fov / (n - 1), 4.0, np.array(ranges, dtype=float))


def test_constant_scan_has_no_boundary():
    assert detect_bsbp_lrf(scan_of([2.0] * 50), 1.0) == []
    assert detect_bsbp_lrf(LaserScan(0.0, 0.1, 4.0, np.array([1.0])), 1.0) == []


def test_t_intersection_scan():
    # wall at 1 m to the right of beam k, opening at 3.5 m from k on
    k = 30
    s = scan_of([1.0] * k + [3.5] * 20)
    out = detect_bsbp_lrf(s, 1.0)
    assert len(out) == 1
    b = out[0]
    assert b.range == 1.0
    assert b.bearing == pytest.approx(s.bearings[k - 1])
    assert (b.x, b.y) == pytest.approx((math.cos(b.bearing), math.sin(b.bearing)))
    assert b.side == -1  # near beam at the lower bearing: the hidden side is to its right


def test_symmetric_openings_mirror():
    half = [1.2] * 15 + [3.8] * 10
    s = scan_of(half[::-1][:-1] + [2.0] + half[1:])
    # symmetric about the middle beam
    assert np.allclose(s.ranges, s.ranges[::-1])
    out = detect_bsbp_lrf(s, 1.0)
    assert len(out) == 2
    a, b = out
    assert a.x == pytest.approx(b.x, abs=1e-6)
    assert a.y == pytest.approx(-b.y, abs=1e-6)


@given(st.lists(st.floats(0.1, 4.0), min_size=2, max_size=60), st.floats(0.2, 2.0))
def test_lrf_reversal_equivariance(ranges, zth):
    s = scan_of(ranges, fov=math.radians(240))
    r = LaserScan(-(s.angle_min + s.angle_increment * (len(ranges) - 1)), s.angle_increment,
                  4.0, s.ranges[::-1].copy())
    a = detect_bsbp_lrf(s, zth)
    b = detect_bsbp_lrf(r, zth)
    assert len(a) == len(b)
    mirrored = sorted(((p.x, -p.y, -p.side) for p in a), key=lambda t: (math.atan2(t[1], t[0]), t[2]))
    for (x, y, side), q in zip(mirrored, b):
        assert (q.x, q.y) == pytest.approx((x, y), abs=1e-9)
        assert q.side == side


def test_lrf_rejects_bad_threshold():
    with pytest.raises(ValueError):
        detect_bsbp_lrf(scan_of([1.0, 2.0]), 0.0)


@pytest.mark.parametrize("b, expected", [
    (BlindSpotBoundary.from_cartesian(1.0, 0.0), (1.0, 0.0)),
    (BlindSpotBoundary.from_cartesian(2.0, 2.0), (2.0, 2.5)),
])
def test_danger_center_examples(b, expected):
    assert danger_center(b, 0.5) == pytest.approx(expected)


def test_danger_center_side_and_singular():
    b = BlindSpotBoundary.from_cartesian(2.0, 2.0, side=-1)
    assert danger_center(b, 0.5) == pytest.approx((2.0, 1.5))
    assert danger_center(BlindSpotBoundary.from_polar(1.0, math.pi / 2), 0.5) is None
    assert danger_center(BlindSpotBoundary.from_polar(1.0, -2.0), 0.5) is None


def test_stopping_distance_examples():
    assert stopping_distance(0.0, -0.5) == 0.0
    assert stopping_distance(1.0, -1.0) == 0.5
    assert stopping_distance(0.5556, -0.5) == pytest.approx(0.3086, abs=1e-4)
    with pytest.raises(ValueError):
        stopping_distance(1.0, 0.0)
    with pytest.raises(ValueError):
        stopping_distance(-1.0, -1.0)


@given(st.floats(0, 5), st.floats(-5, -0.01))
def test_stopping_distance_quadratic(v, a):
    assert stopping_distance(2 * v, a) == pytest.approx(4 * stopping_distance(v, a), rel=1e-12)


def discrete_stop(v, a, dt=1e-3):
    x = 0.0
    while v > 0:
        nv = max(v + a * dt, 0.0)
        x += 0.5 * (v + nv) * (dt if nv > 0 else v / -a)
        v = nv
    return x


@given(st.floats(0.05, 3.0), st.floats(-3.0, -0.1))
def test_stopping_distance_vs_discrete(v, a):
    assert stopping_distance(v, a) == pytest.approx(discrete_stop(v, a), rel=0.01)


def test_danger_radius_examples():
    assert danger_radius(0.3086, MODEL) == pytest.approx(1.3086)
    assert danger_radius(0.0, StoppingModel(-1.0, 0.0, 0.0, 0.0)) == 0.0
    with pytest.raises(ValueError):
        StoppingModel(0.5)


@given(st.floats(0, 3), st.floats(0, 2), st.floats(0, 2), st.floats(0.001, 1))
def test_danger_radius_monotone(x, l, o, bump):
    base = danger_radius(x, StoppingModel(-1, l, o, 0.5))
    assert danger_radius(x + bump, StoppingModel(-1, l, o, 0.5)) > base
    assert danger_radius(x, StoppingModel(-1, l + bump, o, 0.5)) > base
    assert danger_radius(x, StoppingModel(-1, l, o + bump, 0.5)) > base


def test_build_danger_zones_examples():
    assert build_danger_zones([], 0.5, MODEL) == []
    b = BlindSpotBoundary.from_polar(math.hypot(2, 2), math.pi / 4)
    (z,) = build_danger_zones([b], 0.5556, MODEL)
    assert z.center == pytest.approx((2.0, 2.5))
    assert z.radius == pytest.approx(1.3086, abs=1e-4)
    (z0,) = build_danger_zones([b], 0.0, MODEL)
    assert z0.radius == pytest.approx(1.0)


@given(st.lists(st.tuples(st.floats(0.1, 5), st.floats(-1.5, 1.5)), max_size=6), st.floats(0, 1))
def test_zone_radius_lower_bound(polar, v):
    bs = [BlindSpotBoundary.from_polar(r, th) for r, th in polar]
    for z in build_danger_zones(bs, v, MODEL):
        assert z.radius >= MODEL.human_stride + MODEL.offset


def test_voxel_examples():
    c = PointCloud([[0.01, 0.01, 0.01], [0.02, 0.05, 0.03], [0.06, 0.03, 0.08]])
    out = voxel_filter(c, 0.1)
    assert len(out) == 1
    assert out.points[0] == pytest.approx([0.03, 0.03, 0.04])
    far = PointCloud([[0.05, 0.05, 0.05], [5.05, 5.05, 5.05]])
    assert np.allclose(np.sort(voxel_filter(far, 0.1).points, axis=0), far.points)
    assert len(voxel_filter(PointCloud(np.zeros((0, 3))), 0.1)) == 0


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.5))
def test_voxel_matches_bucket_oracle(seed, size):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-2, 2, (int(rng.integers(1, 300)), 3))
    got = voxel_filter(PointCloud(pts), size).points
    want = np.array(list(voxel_buckets(pts, size).values()))
    assert len(got) == len(want) <= len(pts)
    key = lambda a: a[np.lexsort(a.T[::-1])]
    assert np.max(np.abs(key(got) - key(want))) <= 1e-9


@given(st.integers(0, 2**32 - 1))
def test_voxel_idempotent_when_centroids_stay(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (100, 3))
    once = voxel_filter(PointCloud(pts), 0.25)
    twice = voxel_filter(once, 0.25)
    # centroids always stay inside their source voxel, so nothing changes
    key = lambda a: a[np.lexsort(a.T[::-1])]
    assert np.allclose(key(once.points), key(twice.points), atol=1e-12)


def test_passthrough_examples():
    c = PointCloud([[1, 0, 0.0], [1, 0, 1.0]])
    assert passthrough_filter(c, 0.05, 2.0).points.tolist() == [[1, 0, 1.0]]
    assert len(passthrough_filter(PointCloud(np.zeros((0, 3))), 0.05, 2.0)) == 0
    with pytest.raises(ValueError):
        passthrough_filter(c, 1.0, 1.0)


def test_cluster_pair_examples():
    t = 0.3
    linked = PointCloud([[1, 0, 0], [1 + 0.9 * t, 0, 0]])
    split = PointCloud([[1, 0, 0], [1 + 1.1 * t, 0, 0]])
    assert len(euclidean_cluster(linked, t, 1)) == 1
    assert len(euclidean_cluster(split, t, 1)) == 2
    assert euclidean_cluster(split, t, 2) == []


def partition_of(clusters, pts):
    index = {tuple(p): i for i, p in enumerate(pts)}
    return sorted(sorted(index[tuple(p)] for p in c.points) for c in clusters)


@given(st.integers(0, 2**32 - 1), st.integers(1, 200), st.floats(0.1, 0.6),
       st.integers(1, 4))
def test_cluster_matches_union_find(seed, n, tol, min_size):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-2, 2, (n, 3))
    clusters = euclidean_cluster(PointCloud(pts), tol, min_size)
    want = sorted(sorted(g) for g in union_find_partition(pts, tol) if len(g) >= min_size)
    assert partition_of(clusters, pts) == want
    ranges = [c.min_range for c in clusters]
    assert ranges == sorted(ranges)


@given(st.integers(0, 2**32 - 1))
def test_clusters_partition_retained_points(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (80, 3))
    clusters = euclidean_cluster(PointCloud(pts), 0.25, 1)
    flat = sorted(i for g in partition_of(clusters, pts) for i in g)
    assert flat == list(range(80))


def test_cluster_extrema_cached():
    c = PointCluster([[1.0, 0.3, 0.5], [1.2, 0.7, 0.5], [0.9, 0.5, 0.5]])
    assert (c.x_max, c.y_max, c.y_min) == (1.2, 0.7, 0.3)
    with pytest.raises(ValueError):
        PointCluster(np.zeros((0, 3)))


def test_bsbp_from_clusters_examples():
    left = PointCluster([[1.0, 0.3, 0.5], [1.2, 0.7, 0.5], [0.9, 0.5, 0.5]])
    (b,) = bsbp_from_clusters([left])
    assert (b.x, b.y) == pytest.approx((1.2, 0.5))
    (r,) = bsbp_from_clusters([PointCluster([[2.0, -1.0, 0.5]])])
    assert (r.x, r.y) == pytest.approx((2.0, -1.0))
    assert bsbp_from_clusters([]) == []


def test_bsbp_picks_nearest_per_side():
    near_left = PointCluster([[1.5, 0.2, 0.5], [1.6, 0.4, 0.5]])
    far_left = PointCluster([[3.0, 0.1, 0.5], [3.2, 0.5, 0.5]])
    right = PointCluster([[2.0, -1.0, 0.5]])
    out = bsbp_from_clusters([far_left, right, near_left])
    assert len(out) == 2
    left = [b for b in out if b.y > 0][0]
    assert left.x == pytest.approx(1.6)


def test_bsbp_skips_range_cut_cluster():
    wall = PointCluster(np.column_stack([np.linspace(0.5, 2.95, 30), np.full(30, 1.0),
                                         np.full(30, 0.5)]))
    assert bsbp_from_clusters([wall], max_range=3.0, margin=0.2) == []
    short = PointCluster(wall.points[:15])
    assert len(bsbp_from_clusters([short], max_range=3.0, margin=0.2)) == 1


def test_cloud_pipeline_end_to_end():
    xs = np.linspace(0.5, 1.5, 40)
    zs = np.linspace(0.1, 1.5, 10)
    X, Z = np.meshgrid(xs, zs)
    wall = np.column_stack([X.ravel(), np.full(X.size, 0.8), Z.ravel()])
    ground = np.column_stack([X.ravel(), np.zeros(X.size), np.zeros(X.size)])
    out = cloud_bsbps(PointCloud(np.vstack([wall, ground])), CloudPipelineConfig(), 3.0)
    assert len(out) == 1
    assert out[0].side == 1 and out[0].x == pytest.approx(1.5, abs=0.1)


def test_write_xyz(tmp_path):
    p = tmp_path / "c.xyz"
    write_xyz(PointCloud([[1, 2, 3], [0.5, -1, 0]]), p)
    assert p.read_bytes() == b"1.000000 2.000000 3.000000\n0.500000 -1.000000 0.000000\n"
