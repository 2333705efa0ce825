"""Deterministic closed-loop scenario execution."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .. import blindspot as bs
from ..config import Params
from ..costmap import (Costmap, LayerStack, compose_master, global_costmap, rasterize_boxes,
                       update_inflation_layer, update_obstacle_layer, window_around,
                       write_blind_spot_costs)
from ..geom import Point2, Pose2D, compose, local_to_global, point_segment_distance, segments_intersect
from ..planning.astar import GlobalPath, InvalidEndpoint, NoPath, astar_plan
from ..planning.dwa import CandidateSet, Method, integrate, sample_candidates, select_velocity
from .sensors import simulate_depth_cloud, simulate_lrf
from .world import RobotSpec, Scenario, ScenarioInvalid, WorldModel


@dataclass(frozen=True)
class SimState:
    t: float
    pose: Pose2D
    v: float = 0.0
    omega: float = 0.0
    ped: Optional[Point2] = None
    ped_velocity: Point2 = Point2(0.0, 0.0)
    ped_active: bool = False
    ped_travelled: float = 0.0
    prev_xy: Optional[Point2] = None

    @classmethod
    def initial(cls, world: WorldModel) -> "SimState":
        ped, vel = None, Point2(0.0, 0.0)
        if world.dynamic is not None:
            dyn = world.dynamic
            ped = dyn.start
            vel = Point2(dyn.direction[0] * dyn.speed, dyn.direction[1] * dyn.speed)
        return cls(0.0, world.start_pose, ped=ped, ped_velocity=vel)


def step(state: SimState, cmd: tuple[float, float], dt: float,
         ped_travel: float = math.inf) -> SimState:
    """Advance the robot under (v, omega) with the rollout integrator.

    An active pedestrian moves with its velocity until it has walked
    ``ped_travel`` metres, then stands still.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v, omega = cmd
    p = state.pose
    x, y, th = integrate(p.x, p.y, p.theta, v, omega, dt)
    ped, walked = state.ped, state.ped_travelled
    if state.ped_active and ped is not None:
        vx, vy = state.ped_velocity
        speed = math.hypot(vx, vy)
        k = dt
        if speed > 0 and walked + speed * dt > ped_travel:
            k = max(ped_travel - walked, 0.0) / speed
        ped = Point2(ped[0] + vx * k, ped[1] + vy * k)
        walked += speed * k
    return replace(state, t=state.t + dt, pose=Pose2D(float(x), float(y), float(th)),
                   v=float(v), omega=float(omega), ped=ped, ped_travelled=walked,
                   prev_xy=Point2(p.x, p.y))


def check_trigger(state: SimState, world: WorldModel) -> SimState:
    """Latch the pedestrian active once the last robot motion crosses the trigger line."""
    if state.ped_active or world.dynamic is None or state.prev_xy is None:
        return state
    trig = world.dynamic.trigger
    if segments_intersect(state.prev_xy, (state.pose.x, state.pose.y), trig.a, trig.b):
        return replace(state, ped_active=True)
    return state


def check_collision(state: SimState, world: WorldModel, robot: RobotSpec) -> tuple[bool, float]:
    """Closed disc test against walls and the pedestrian; returns (collided, clearance)."""
    r = robot.footprint_radius
    clearance = math.inf
    if len(world.wall_array):
        clearance = float(point_segment_distance(state.pose.x, state.pose.y,
                                                 world.wall_array).min()) - r
    if world.dynamic is not None and state.ped is not None:
        d = math.hypot(state.pose.x - state.ped[0], state.pose.y - state.ped[1])
        clearance = min(clearance, d - r - world.dynamic.radius)
    return clearance <= 0.0, clearance


@dataclass
class Metrics:
    goal_reached: bool = False
    collided: bool = False
    elapsed: float = 0.0
    min_clearance: float = math.inf
    termination: str = ""
    cycles: int = 0
    trajectory: list[tuple] = field(default_factory=list)

    def summary(self) -> dict:
        return {"goal_reached": self.goal_reached, "collided": self.collided,
                "elapsed": round(self.elapsed, 6), "min_clearance": round(self.min_clearance, 6),
                "termination": self.termination, "cycles": self.cycles}


@dataclass
class Cycle:
    """Everything one control cycle saw and decided; handed to observers."""
    index: int
    state: SimState
    scan: bs.LaserScan
    cloud: Optional[bs.PointCloud]
    bsbps: list
    zones: list  # danger zones in the global frame
    stack: LayerStack
    master: Costmap
    path: GlobalPath
    candidates: CandidateSet
    command: tuple[float, float]


def _perceive(method: Method, state: SimState, scenario: Scenario, scan, cloud, params: Params):
    """Blind-spot boundaries for the method's source and their global danger zones."""
    model = params.stopping_model()
    if method.bsl_source == "lrf":
        bsbps = bs.detect_bsbp_lrf(scan, params.jump_threshold)
        frame = compose(state.pose, scenario.robot.lrf_mount)
    elif method.bsl_source == "cloud":
        origins = [(0.0, 0.0, m.height) for m in scenario.robot.camera_mounts]
        bsbps = bs.cloud_bsbps(cloud, params.cloud_pipeline(), scenario.camera.max_range, origins)
        frame = state.pose
    else:
        return [], []
    zones = [bs.DangerZone(local_to_global(frame, z.center), z.radius)
             for z in bs.build_danger_zones(bsbps, state.v, model)]
    return bsbps, zones


def run_scenario(scenario: Scenario, method, params: Optional[Params] = None,
                 observer: Optional[Callable[[Cycle], Optional[bool]]] = None) -> Metrics:
    """Sense, update layers, plan and step until goal, collision or timeout.

    ``observer`` is called once per control cycle; returning True stops the
    run early (the metrics then carry termination ``"stopped"``).
    """
    method = Method(method)
    params = params if params is not None else Params()
    world, robot = scenario.world, scenario.robot
    scenario.validate(params.resolution)
    dwa = params.dwa(method)
    limits = params.limits()
    inflation = params.inflation(robot.footprint_radius)
    bsl_cost = params.bsl_cost()
    rng = np.random.default_rng(params.noise_seed) if params.range_noise > 0 else None

    static_full = rasterize_boxes(params.resolution, world.bounds, world.boxes)
    global_map = global_costmap(static_full, inflation)
    try:
        path = astar_plan(global_map, (world.start_pose.x, world.start_pose.y), world.goal,
                          params.cost_penalty)
    except (InvalidEndpoint, NoPath) as exc:
        raise ScenarioInvalid(f"no global path from start to goal: {exc}") from exc
    goal = world.goal
    dt = params.dt_ctrl
    replan_every = max(1, round(params.replan_period / dt))
    max_cycles = int(math.floor(params.timeout / dt + 1e-9))

    state = SimState.initial(world)
    metrics = Metrics()
    k = 0
    while True:
        collided, clearance = check_collision(state, world, robot)
        metrics.min_clearance = min(metrics.min_clearance, clearance)
        p = state.pose
        metrics.trajectory.append((state.t, p.x, p.y, p.theta, state.v, state.omega, clearance))
        if collided:
            metrics.collided, metrics.termination = True, "collision"
            break
        if math.hypot(p.x - goal[0], p.y - goal[1]) <= world.goal_tolerance:
            metrics.goal_reached, metrics.termination = True, "goal"
            break
        if k >= max_cycles:
            metrics.termination = "timeout"
            break

        scan = simulate_lrf(state, world, scenario.lrf, robot, rng, params.range_noise)
        cloud = (simulate_depth_cloud(state, world, scenario.camera, robot)
                 if method.bsl_source == "cloud" else None)
        lrf_pose = compose(p, robot.lrf_mount)

        if k % replan_every == 0:
            try:
                path = astar_plan(global_costmap(static_full, inflation, scan, lrf_pose),
                                  (p.x, p.y), goal, params.cost_penalty)
            except (InvalidEndpoint, NoPath):
                pass  # keep following the previous plan

        static = window_around(static_full, (p.x, p.y), params.window_size)
        stack = LayerStack.from_static(static, bsl_enabled=method.bsl_source is not None)
        update_obstacle_layer(stack.obstacle_layer, scan, lrf_pose)
        source = static.copy()
        np.maximum(source.cells, stack.obstacle_layer.cells, out=source.cells)
        update_inflation_layer(stack.inflation_layer, source, inflation)
        bsbps, zones = _perceive(method, state, scenario, scan, cloud, params)
        write_blind_spot_costs(stack.bsl_layer, zones, bsl_cost)
        master = compose_master(stack)

        cands = sample_candidates(p, state.v, state.omega, limits, dt, path, goal, master, dwa)
        cmd = select_velocity(cands, dwa, state.v, limits, dt)
        if observer is not None:
            stop = observer(Cycle(k, state, scan, cloud, bsbps, zones, stack, master, path,
                                  cands, cmd))
            if stop:
                metrics.termination = "stopped"
                break

        travel = world.dynamic.travel if world.dynamic is not None else math.inf
        state = check_trigger(step(state, cmd, dt, travel), world)
        k += 1

    metrics.elapsed = state.t
    metrics.cycles = k
    return metrics
