"""Run configuration: defaults < JSON file < command-line flags."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace

from .integration import NavConfig
from .local_planner import DEFAULT_CURVATURES, PlannerConfig

SEED_ENV = "DUALBEV_SEED"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    k: float = 0.5
    K: int = 7
    H: int = 5
    P: int = 5
    curvatures: tuple = DEFAULT_CURVATURES
    v: float = 1.5
    dt: float = 0.5
    goal_radius: float = 2.0
    step_budget: int = 200
    omega_max: float = 1.2
    d_max: float = 20.0
    lookahead: float = 10.0
    sigma: float = 2.0
    alpha: float = 0.25
    gamma: float = 2.0
    stroke_radius: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "curvatures", tuple(float(c) for c in self.curvatures))
        if len(self.curvatures) != self.K:
            raise ConfigError(f"curvature sweep has {len(self.curvatures)} entries but K={self.K}")
        if self.sigma <= 0 or self.stroke_radius <= 0:
            raise ConfigError("sigma and stroke_radius must be positive")
        if self.alpha < 0 or self.gamma < 0:
            raise ConfigError("alpha and gamma must be non-negative")
        try:
            self.nav()
            self.planner()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def nav(self) -> NavConfig:
        return NavConfig(
            k=self.k, d_max=self.d_max, v=self.v, dt=self.dt, omega_max=self.omega_max,
            goal_radius=self.goal_radius, step_budget=self.step_budget, P=self.P,
        )

    def planner(self) -> PlannerConfig:
        return PlannerConfig(
            K=self.K, H=self.H, P=self.P, curvatures=self.curvatures, v=self.v, dt=self.dt,
            lookahead=self.lookahead, seed=self.seed,
        )

    def to_json(self) -> str:
        d = asdict(self)
        d["curvatures"] = list(self.curvatures)
        return json.dumps(d, sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: dict, base=None) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        base = base or cls()
        try:
            return replace(base, **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path=None, overrides=None) -> RunConfig:
    """Merge defaults, an optional JSON file and non-None flag overrides; DUALBEV_SEED fills an unset seed."""
    data = {}
    if path:
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if "seed" not in data and "seed" not in overrides and os.environ.get(SEED_ENV):
        data["seed"] = int(os.environ[SEED_ENV])
    cfg = RunConfig.from_dict(data)
    return RunConfig.from_dict(overrides, base=cfg)
