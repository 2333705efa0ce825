"""Flat run parameters and builders for the per-module configs.

Blind-spot defaults: human stride 0.8 m, offset 0.2 m, shoulder width 0.5 m,
cost scaling 1, maximum cost 253 and jump threshold 1 m. Cost-function
defaults: weights 2 / 1 / 10 / 10 / 0.5 (pos, gol, obs, dan, vel) over a 4 s
prediction horizon. The rest are simulator and planner settings.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Mapping

from .blindspot import CloudPipelineConfig, StoppingModel
from .costmap import BslCostConfig, InflationConfig
from .planning.dwa import DwaConfig, Method, VelocityLimits


class InvalidParameter(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    # blind-spot layer
    human_stride: float = 0.8
    offset_distance: float = 0.2
    shoulder_width: float = 0.5
    cost_scaling: float = 1.0
    max_cost: float = 253.0
    jump_threshold: float = 1.0
    decel: float = -0.5
    # cost function
    w_pos: float = 2.0
    w_gol: float = 1.0
    w_obs: float = 10.0
    w_dan: float = 10.0
    w_vel: float = 0.5
    predict_time: float = 4.0
    eps_vel: float = 0.01
    v_samples: int = 11
    omega_samples: int = 21
    dt_sim: float = 0.1
    # motion limits
    v_max: float = 2.0 / 3.6
    v_min: float = 0.0
    omega_max: float = 1.0
    accel_v: float = 0.5
    accel_omega: float = 2.0
    # costmaps and global planning
    resolution: float = 0.05
    window_size: float = 6.0
    inflation_radius: float = 0.5
    footprint_padding: float = 0.05
    cost_penalty: float = 1.0
    replan_period: float = 1.0
    # point-cloud pipeline
    voxel_size: float = 0.10
    z_min: float = 0.05
    z_max: float = 1.8
    cluster_tolerance: float = 0.30
    min_cluster_size: int = 5
    # loop
    dt_ctrl: float = 0.1
    timeout: float = 120.0
    range_noise: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        try:
            self.limits()
            self.stopping_model()
            self.cloud_pipeline()
            DwaConfig(**self._dwa_kwargs(Method.METHOD1))
        except ValueError as exc:
            raise InvalidParameter(str(exc)) from exc
        if self.resolution <= 0 or self.window_size <= 0 or self.dt_ctrl <= 0:
            raise InvalidParameter("resolution, window_size and dt_ctrl must be positive")
        if self.timeout <= 0 or self.replan_period <= 0 or self.jump_threshold <= 0:
            raise InvalidParameter("timeout, replan_period and jump_threshold must be positive")
        if self.range_noise < 0 or self.cost_penalty < 0 or self.footprint_padding < 0:
            raise InvalidParameter("range_noise, cost_penalty and footprint_padding must be >= 0")
        if self.inflation_radius <= 0:
            raise InvalidParameter("inflation_radius must be positive")

    def _dwa_kwargs(self, method):
        return dict(w_pos=self.w_pos, w_gol=self.w_gol, w_obs=self.w_obs, w_dan=self.w_dan,
                    w_vel=self.w_vel, predict_time=self.predict_time, dt_sim=self.dt_sim,
                    v_samples=self.v_samples, omega_samples=self.omega_samples,
                    method=method, eps_vel=self.eps_vel)

    def dwa(self, method) -> DwaConfig:
        return DwaConfig(**self._dwa_kwargs(Method(method)))

    def limits(self) -> VelocityLimits:
        return VelocityLimits(self.v_max, self.v_min, self.omega_max, self.accel_v,
                              self.accel_omega)

    def stopping_model(self) -> StoppingModel:
        return StoppingModel(self.decel, self.human_stride, self.offset_distance,
                             self.shoulder_width)

    def bsl_cost(self) -> BslCostConfig:
        return BslCostConfig(self.max_cost, self.cost_scaling)

    def inflation(self, robot_radius: float) -> InflationConfig:
        try:
            inscribed = robot_radius + self.footprint_padding
            return InflationConfig(inscribed, max(self.inflation_radius, inscribed),
                                   self.cost_scaling)
        except ValueError as exc:
            raise InvalidParameter(str(exc)) from exc

    def cloud_pipeline(self) -> CloudPipelineConfig:
        return CloudPipelineConfig(self.voxel_size, self.z_min, self.z_max,
                                   self.cluster_tolerance, self.min_cluster_size)

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def override(self, values: Mapping[str, Any]) -> "Params":
        """Copy with ``values`` applied; keys may be field names or table symbols."""
        fields = {f.name: f for f in dataclasses.fields(self)}
        changes = {}
        for key, raw in values.items():
            name = ALIASES.get(key, key)
            if name not in fields:
                raise InvalidParameter(f"unknown parameter {key!r}")
            typ = int if fields[name].type in ("int", int) else float
            try:
                changes[name] = typ(raw)
            except (TypeError, ValueError) as exc:
                raise InvalidParameter(f"bad value for {key!r}: {raw!r}") from exc
        return dataclasses.replace(self, **changes)


ALIASES = {
    "L": "human_stride", "L_hum": "human_stride", "X_off": "offset_distance",
    "H_w": "shoulder_width", "S_cst": "cost_scaling", "A_cst": "max_cost",
    "W_pos": "w_pos", "W_gol": "w_gol", "W_obs": "w_obs", "W_dan": "w_dan", "W_ban": "w_dan",
    "W_vel": "w_vel", "T_pre": "predict_time", "Z_th": "jump_threshold",
    "Z_thr": "jump_threshold", "a_mov": "decel",
}
