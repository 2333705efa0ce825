"""World, robot and sensor descriptions, and the scenario file loader."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from ..costmap import LETHAL, rasterize_boxes, world_to_cell, OutOfBounds
from ..geom import Point2, Pose2D, Segment2, segments_array

KMH = 1.0 / 3.6


class ScenarioInvalid(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    """Axis-aligned footprint with lower-left corner (x, y), extruded to ``height``."""
    x: float
    y: float
    w: float
    h: float
    height: float = 2.0

    def segments(self) -> list[Segment2]:
        c = [Point2(self.x, self.y), Point2(self.x + self.w, self.y),
             Point2(self.x + self.w, self.y + self.h), Point2(self.x, self.y + self.h)]
        return [Segment2(c[i], c[(i + 1) % 4]) for i in range(4)]


@dataclass(frozen=True)
class DynamicObstacle:
    start: Point2
    direction: Point2  # unit vector
    speed: float  # m/s
    radius: float
    trigger: Segment2
    height: float = 1.7
    travel: float = math.inf  # walking distance after which the pedestrian stands still

    def __post_init__(self):
        if self.speed < 0 or self.radius <= 0:
            raise ValueError("speed must be >= 0 and radius > 0")
        if not self.travel > 0:
            raise ValueError("travel must be positive")
        n = math.hypot(*self.direction)
        if n == 0:
            raise ValueError("direction must be non-zero")
        object.__setattr__(self, "direction", Point2(self.direction[0] / n, self.direction[1] / n))


@dataclass
class WorldModel:
    boxes: list[Box]
    start_pose: Pose2D
    goal: Point2
    goal_tolerance: float = 0.3
    dynamic: Optional[DynamicObstacle] = None
    bounds: Optional[tuple[float, float, float, float]] = None
    walls: list[Segment2] = field(init=False)
    wall_array: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.walls = [s for b in self.boxes for s in b.segments()]
        self.wall_array = segments_array(self.walls)
        if self.bounds is None:
            if not self.boxes:
                raise ValueError("bounds are required for a world without boxes")
            self.bounds = (min(b.x for b in self.boxes), min(b.y for b in self.boxes),
                           max(b.x + b.w for b in self.boxes), max(b.y + b.h for b in self.boxes))


@dataclass(frozen=True)
class CameraMount:
    yaw: float
    height: float


@dataclass(frozen=True)
class LrfSpec:
    fov: float = math.radians(240.0)
    ray_count: int = 683
    max_range: float = 4.0

    def __post_init__(self):
        if self.ray_count < 2 or self.max_range <= 0 or self.fov <= 0:
            raise ValueError("invalid laser model")


@dataclass(frozen=True)
class DepthCamSpec:
    h_fov: float = math.radians(87.0)
    v_fov: float = math.radians(58.0)
    h_res: int = 64
    v_res: int = 36
    min_range: float = 0.3
    max_range: float = 3.0

    def __post_init__(self):
        if self.h_res < 2 or self.v_res < 2:
            raise ValueError("camera resolution must be at least 2x2")
        if not 0 < self.min_range < self.max_range:
            raise ValueError("need 0 < min_range < max_range")


@dataclass(frozen=True)
class RobotSpec:
    footprint_radius: float = 0.2
    lrf_mount: Pose2D = Pose2D()
    camera_mounts: tuple[CameraMount, ...] = (CameraMount(math.radians(25.0), 0.5),
                                              CameraMount(math.radians(-25.0), 0.5))

    def __post_init__(self):
        if self.footprint_radius <= 0:
            raise ValueError("footprint_radius must be positive")


@dataclass
class Scenario:
    name: str
    world: WorldModel
    robot: RobotSpec = field(default_factory=RobotSpec)
    lrf: LrfSpec = field(default_factory=LrfSpec)
    camera: DepthCamSpec = field(default_factory=DepthCamSpec)
    planner: dict[str, Any] = field(default_factory=dict)

    def validate(self, resolution: float = 0.05) -> None:
        static = rasterize_boxes(resolution, self.world.bounds, self.world.boxes)
        for what, p in (("start", (self.world.start_pose.x, self.world.start_pose.y)),
                        ("goal", self.world.goal)):
            try:
                ix, iy = world_to_cell(static, p)
            except OutOfBounds:
                raise ScenarioInvalid(f"{what} lies outside the world bounds") from None
            if static.cells[iy, ix] >= LETHAL:
                raise ScenarioInvalid(f"{what} lies inside an obstacle")


def _num(d: dict, key: str, default=None) -> float:
    if key not in d:
        if default is None:
            raise ScenarioInvalid(f"missing key {key!r}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ScenarioInvalid(f"key {key!r} must be a finite number")
    return float(v)


def scenario_from_dict(data: dict, name: str = "scenario") -> Scenario:
    try:
        w = data["world"]
        r = data["robot"]
        boxes = [Box(_num(b, "x"), _num(b, "y"), _num(b, "w"), _num(b, "h"),
                     _num(b, "height", 2.0)) for b in w.get("boxes", [])]
        if any(b.w <= 0 or b.h <= 0 or b.height <= 0 for b in boxes):
            raise ScenarioInvalid("box sizes must be positive")
        bounds = None
        if "bounds" in w:
            bd = w["bounds"]
            bounds = (_num(bd, "xmin"), _num(bd, "ymin"), _num(bd, "xmax"), _num(bd, "ymax"))
        dynamic = None
        if "dynamic" in w:
            dd, td = w["dynamic"], w["trigger"]
            trigger = Segment2(Point2(_num(td, "ax"), _num(td, "ay")),
                               Point2(_num(td, "bx"), _num(td, "by")))
            dynamic = DynamicObstacle(
                Point2(_num(dd, "x"), _num(dd, "y")),
                Point2(_num(dd, "dir_x"), _num(dd, "dir_y")),
                _num(dd, "speed_kmh") * KMH, _num(dd, "radius", 0.25), trigger,
                _num(dd, "height", 1.7), _num(dd, "travel", math.inf))
        s, g = r["start"], r["goal"]
        world = WorldModel(boxes, Pose2D(_num(s, "x"), _num(s, "y"), _num(s, "theta", 0.0)),
                           Point2(_num(g, "x"), _num(g, "y")), _num(r, "tolerance", 0.3),
                           dynamic, bounds)
        robot = RobotSpec(footprint_radius=_num(r, "radius", 0.2))
        sensors = data.get("sensors", {})
        lrf = LrfSpec()
        if "lrf" in sensors:
            ld = sensors["lrf"]
            lrf = LrfSpec(math.radians(_num(ld, "fov_deg", 240.0)), int(_num(ld, "rays", 683)),
                          _num(ld, "max_range", 4.0))
        cam = DepthCamSpec()
        if "camera" in sensors:
            cd = sensors["camera"]
            cam = DepthCamSpec(math.radians(_num(cd, "h_fov_deg", 87.0)),
                               math.radians(_num(cd, "v_fov_deg", 58.0)),
                               int(_num(cd, "h_res", 64)), int(_num(cd, "v_res", 36)),
                               _num(cd, "min_range", 0.3), _num(cd, "max_range", 3.0))
            if "mounts" in cd:
                mounts = tuple(CameraMount(math.radians(_num(m, "yaw_deg")), _num(m, "height"))
                               for m in cd["mounts"])
                robot = RobotSpec(robot.footprint_radius, robot.lrf_mount, mounts)
        planner = dict(data.get("planner", {}))
        scenario = Scenario(str(data.get("name", name)), world, robot, lrf, cam, planner)
    except ScenarioInvalid:
        raise
    except (KeyError, TypeError, AttributeError) as exc:
        raise ScenarioInvalid(f"malformed scenario: {exc!r}") from exc
    except ValueError as exc:
        raise ScenarioInvalid(str(exc)) from exc
    return scenario


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioInvalid(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioInvalid(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ScenarioInvalid(f"{path}: top level must be an object")
    return scenario_from_dict(data, name=path.stem)
