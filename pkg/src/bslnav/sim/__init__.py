from .engine import Cycle, Metrics, SimState, check_collision, check_trigger, run_scenario, step
from .sensors import camera_rays, simulate_depth_cloud, simulate_lrf
from .world import (KMH, Box, CameraMount, DepthCamSpec, DynamicObstacle, LrfSpec, RobotSpec,
                    Scenario, ScenarioInvalid, WorldModel, load_scenario, scenario_from_dict)
