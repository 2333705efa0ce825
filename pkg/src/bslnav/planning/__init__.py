from .astar import GlobalPath, InvalidEndpoint, NoPath, astar_plan
from .dwa import (CandidateSet, CostBreakdown, DwaConfig, Method, TrajectoryCandidate,
                  VelocityLimits, dynamic_window, evaluate_candidate, integrate, rollout,
                  sample_candidates, select_index, select_velocity)
