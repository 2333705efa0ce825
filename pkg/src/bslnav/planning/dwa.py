"""Dynamic Window Approach with the four cost-function variants.

Method1 scores candidates with the path, goal and obstacle terms on a master
costmap without the blind-spots layer. Methods 2 and 3 use the same terms on
a master that includes the blind-spots layer (laser-fed and cloud-fed
respectively). Method4 adds a velocity term, the reciprocal of the
candidate's translational speed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..costmap import LETHAL, UNKNOWN, Costmap
from ..geom import Pose2D, normalize_angle
from .astar import GlobalPath

INADMISSIBLE = math.inf


class Method(enum.IntEnum):
    METHOD1 = 1
    METHOD2 = 2
    METHOD3 = 3
    METHOD4 = 4

    @property
    def bsl_source(self) -> Optional[str]:
        return {1: None, 2: "lrf", 3: "cloud", 4: "cloud"}[int(self)]

    @property
    def velocity_term(self) -> bool:
        return self is Method.METHOD4


@dataclass
class VelocityLimits:
    v_max: float = 2.0 / 3.6
    v_min: float = 0.0
    omega_max: float = 1.0
    accel_v: float = 0.5
    accel_omega: float = 2.0

    def __post_init__(self):
        if self.v_min < 0:
            raise ValueError("reverse motion is not supported (v_min < 0)")
        if min(self.v_max, self.omega_max, self.accel_v, self.accel_omega) <= 0:
            raise ValueError("velocity and acceleration limits must be positive")
        if self.v_min > self.v_max:
            raise ValueError("v_min exceeds v_max")


@dataclass
class DwaConfig:
    w_pos: float = 2.0
    w_gol: float = 1.0
    w_obs: float = 10.0
    w_dan: float = 10.0
    w_vel: float = 0.5
    predict_time: float = 4.0
    dt_sim: float = 0.1
    v_samples: int = 11
    omega_samples: int = 21
    method: Method = Method.METHOD4
    eps_vel: float = 0.01

    def __post_init__(self):
        self.method = Method(self.method)
        if min(self.w_pos, self.w_gol, self.w_obs, self.w_dan, self.w_vel) < 0:
            raise ValueError("weights must be non-negative")
        if self.predict_time <= 0 or self.dt_sim <= 0:
            raise ValueError("predict_time and dt_sim must be positive")
        if self.v_samples < 2 or self.omega_samples < 2:
            raise ValueError("need at least two samples per axis")
        if self.eps_vel <= 0:
            raise ValueError("eps_vel must be positive")

    @property
    def steps(self) -> int:
        n = round(self.predict_time / self.dt_sim)
        if abs(n * self.dt_sim - self.predict_time) > 1e-9:
            raise ValueError("dt_sim must divide predict_time")
        return n

    def scaled(self, k: float) -> "DwaConfig":
        """Copy with every weight multiplied by ``k``."""
        return DwaConfig(self.w_pos * k, self.w_gol * k, self.w_obs * k, self.w_dan * k,
                         self.w_vel * k, self.predict_time, self.dt_sim, self.v_samples,
                         self.omega_samples, self.method, self.eps_vel)


@dataclass
class CostBreakdown:
    pos: float
    gol: float
    obs: float  # c^obs for Method1, c^dan otherwise: max master cost / 254
    vel: float
    total: float
    admissible: bool


@dataclass
class TrajectoryCandidate:
    v: float
    omega: float
    poses: np.ndarray  # (steps + 1, 3)
    costs: Optional[CostBreakdown] = None


def dynamic_window(v_cur: float, omega_cur: float, limits: VelocityLimits, dt: float):
    """Velocities reachable within one control period, clipped to the absolute limits."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    dv, dw = limits.accel_v * dt, limits.accel_omega * dt
    v_lo = max(limits.v_min, v_cur - dv)
    v_hi = min(limits.v_max, v_cur + dv)
    if v_lo > v_hi:  # current speed outside the limits: collapse onto the nearest bound
        v_lo = v_hi = min(max(v_cur, limits.v_min), limits.v_max)
    w_lo = max(-limits.omega_max, omega_cur - dw)
    w_hi = min(limits.omega_max, omega_cur + dw)
    if w_lo > w_hi:
        w_lo = w_hi = min(max(omega_cur, -limits.omega_max), limits.omega_max)
    return (v_lo, v_hi), (w_lo, w_hi)


def integrate(x, y, theta, v, omega, t):
    """Exact unicycle pose after driving (v, omega) for time t (broadcasts)."""
    x, y, theta, v, omega, t = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (x, y, theta, v, omega, t)))
    straight = np.abs(omega) < 1e-12
    w_safe = np.where(straight, 1.0, omega)
    th1 = theta + omega * t
    r = v / w_safe
    xa = x + r * (np.sin(th1) - np.sin(theta))
    ya = y - r * (np.cos(th1) - np.cos(theta))
    xs = x + v * t * np.cos(theta)
    ys = y + v * t * np.sin(theta)
    return np.where(straight, xs, xa), np.where(straight, ys, ya), th1


def rollout(start: Pose2D, v: float, omega: float, predict_time: float, dt_sim: float) -> np.ndarray:
    """Poses at t = 0, dt, ..., predict_time for constant (v, omega); shape (n + 1, 3)."""
    n = round(predict_time / dt_sim)
    if abs(n * dt_sim - predict_time) > 1e-9:
        raise ValueError("dt_sim must divide predict_time")
    t = np.arange(n + 1) * dt_sim
    x, y, th = integrate(start.x, start.y, start.theta, v, omega, t)
    th = np.vectorize(normalize_angle, otypes=[float])(th)
    return np.column_stack([x, y, th])


def distance_to_polyline(points: np.ndarray, waypoints: np.ndarray) -> np.ndarray:
    """Distance from each point (N, 2) to the polyline through ``waypoints`` (K, 2)."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    wp = np.asarray(waypoints, dtype=float).reshape(-1, 2)
    if len(wp) == 1:
        return np.hypot(points[:, 0] - wp[0, 0], points[:, 1] - wp[0, 1])
    a, b = wp[:-1], wp[1:]
    e = b - a
    ll = np.einsum("ij,ij->i", e, e)
    rel = points[:, None, :] - a[None, :, :]
    u = np.einsum("nkj,kj->nk", rel, e) / np.where(ll > 0, ll, 1.0)
    u = np.clip(u, 0.0, 1.0)
    q = a[None] + u[..., None] * e[None] - points[:, None, :]
    return np.sqrt(np.min(np.einsum("nkj,nkj->nk", q, q), axis=1))


def simplify_polyline(waypoints: np.ndarray) -> np.ndarray:
    """Drop interior waypoints whose incoming and outgoing steps are identical.

    Grid paths are mostly straight runs of equal steps, so this shrinks them a
    lot while describing exactly the same curve.
    """
    wp = np.asarray(waypoints, dtype=float).reshape(-1, 2)
    if len(wp) < 3:
        return wp
    step = np.diff(wp, axis=0)
    same = np.all(np.abs(step[1:] - step[:-1]) <= 1e-12, axis=1)
    keep = np.concatenate([[True], ~same, [True]])
    return wp[keep]


def _weights(cfg: DwaConfig) -> tuple[float, float, float, float]:
    w_obs = cfg.w_obs if cfg.method is Method.METHOD1 else cfg.w_dan
    w_vel = cfg.w_vel if cfg.method.velocity_term else 0.0
    return cfg.w_pos, cfg.w_gol, w_obs, w_vel


def total_cost(pos, gol, obs, vel, admissible, cfg: DwaConfig):
    """Weighted sum for the configured variant; inadmissible entries get +inf."""
    wp, wg, wo, wv = _weights(cfg)
    j = wp * np.asarray(pos) + wg * np.asarray(gol) + wo * np.asarray(obs)
    if wv:
        j = j + wv * np.asarray(vel)
    return np.where(admissible, j, INADMISSIBLE)


def evaluate_candidate(t: TrajectoryCandidate, path: GlobalPath, goal: Sequence[float],
                       master: Costmap, cfg: DwaConfig) -> CostBreakdown:
    end = t.poses[-1, :2]
    pos = float(distance_to_polyline(end[None], path.waypoints)[0])
    gol = float(math.hypot(end[0] - goal[0], end[1] - goal[1]))
    costs = master.lookup(t.poses[:, 0], t.poses[:, 1], outside=UNKNOWN)
    peak = int(costs.max())
    admissible = peak < LETHAL
    obs = peak / LETHAL
    vel = 1.0 / max(t.v, cfg.eps_vel)
    total = float(total_cost(pos, gol, obs, vel, admissible, cfg))
    return CostBreakdown(pos, gol, obs, vel, total, admissible)


@dataclass
class CandidateSet:
    """Every sampled (v, omega) of one control cycle with its unweighted terms."""
    v: np.ndarray
    omega: np.ndarray
    poses: np.ndarray  # (C, steps + 1, 3)
    pos: np.ndarray
    gol: np.ndarray
    obs: np.ndarray
    vel: np.ndarray
    admissible: np.ndarray

    def __len__(self):
        return len(self.v)

    def totals(self, cfg: DwaConfig) -> np.ndarray:
        return total_cost(self.pos, self.gol, self.obs, self.vel, self.admissible, cfg)

    def candidate(self, i: int, cfg: DwaConfig) -> TrajectoryCandidate:
        costs = CostBreakdown(float(self.pos[i]), float(self.gol[i]), float(self.obs[i]),
                              float(self.vel[i]), float(self.totals(cfg)[i]),
                              bool(self.admissible[i]))
        return TrajectoryCandidate(float(self.v[i]), float(self.omega[i]), self.poses[i], costs)


def sample_candidates(pose: Pose2D, v_cur: float, omega_cur: float, limits: VelocityLimits,
                      dt_ctrl: float, path: GlobalPath, goal: Sequence[float], master: Costmap,
                      cfg: DwaConfig) -> CandidateSet:
    """Roll out and score the whole sampling grid over the dynamic window at once."""
    (v_lo, v_hi), (w_lo, w_hi) = dynamic_window(v_cur, omega_cur, limits, dt_ctrl)
    vs = np.linspace(v_lo, v_hi, cfg.v_samples)
    ws = np.linspace(w_lo, w_hi, cfg.omega_samples)
    V, W = (a.ravel() for a in np.meshgrid(vs, ws, indexing="ij"))
    t = np.arange(cfg.steps + 1) * cfg.dt_sim
    x, y, th = integrate(pose.x, pose.y, pose.theta, V[:, None], W[:, None], t[None, :])
    th = math.pi - np.mod(math.pi - th, 2 * math.pi)
    poses = np.stack([x, y, th], axis=-1)

    end = poses[:, -1, :2]
    pos = distance_to_polyline(end, simplify_polyline(path.waypoints))
    gol = np.hypot(end[:, 0] - goal[0], end[:, 1] - goal[1])
    peak = master.lookup(x, y, outside=UNKNOWN).max(axis=1)
    admissible = peak < LETHAL
    obs = peak / LETHAL
    vel = 1.0 / np.maximum(V, cfg.eps_vel)
    return CandidateSet(V, W, poses, pos, gol, obs, vel, admissible)


def select_index(v: np.ndarray, omega: np.ndarray, totals: np.ndarray) -> Optional[int]:
    """Index of the cheapest admissible candidate; ties prefer higher v then smaller |omega|."""
    ok = np.isfinite(totals)
    if not ok.any():
        return None
    idx = np.nonzero(ok)[0]
    order = np.lexsort((omega[idx], np.abs(omega[idx]), -v[idx], totals[idx]))
    return int(idx[order[0]])


def select_velocity(candidates: CandidateSet, cfg: DwaConfig, v_cur: float,
                    limits: VelocityLimits, dt_ctrl: float) -> tuple[float, float]:
    """Argmin over admissible candidates, or a straight braking command if none is."""
    i = select_index(candidates.v, candidates.omega, candidates.totals(cfg))
    if i is None:
        return max(v_cur - limits.accel_v * dt_ctrl, 0.0), 0.0
    return float(candidates.v[i]), float(candidates.omega[i])
