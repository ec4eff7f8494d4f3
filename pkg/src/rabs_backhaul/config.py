"""Run configuration: one JSON document with scenario, channel, traffic and
energy sections plus solver settings. An empty document is the default map
and Table-I style physical parameters."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .channel import LinkBudget
from .energy import EnergyParams
from .scenario import MapConfig, paper_layout
from .traffic import TrafficConfig

SOLVERS = ("two-stage", "greedy", "exact", "dense")
TOP_LEVEL = {"scenario", "channel", "traffic", "energy", "solver", "N", "H", "rounding_trials", "seed",
             "output_dir", "lp_method"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    scenario: MapConfig = field(default_factory=paper_layout)
    channel: LinkBudget = field(default_factory=LinkBudget)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    energy: EnergyParams = field(default_factory=EnergyParams)
    solver: str = "two-stage"
    N: int = 10
    H: int = 3
    rounding_trials: int = 50
    seed: int = 0
    output_dir: str = "out"
    lp_method: str = "simplex"
    demand_file: Optional[str] = None

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver: must be one of {', '.join(SOLVERS)}, got {self.solver!r}")
        for name in ("N", "H", "rounding_trials"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name}: must be an integer >= 1, got {v!r}")
        if self.lp_method not in ("simplex", "highs"):
            raise ConfigError(f"lp_method: must be 'simplex' or 'highs', got {self.lp_method!r}")
        if self.energy.epoch_duration != self.traffic.epoch_duration:
            raise ConfigError("energy.epoch_duration must equal traffic.epoch_duration")

    def replace(self, **changes) -> "RunConfig":
        try:
            return dataclasses.replace(self, **changes)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, *, N=None, H=None, epochs=None, seed=None, rounding_trials=None, solver=None,
                       sigma=None, output_dir=None) -> "RunConfig":
        ch = {k: v for k, v in dict(N=N, H=H, seed=seed, rounding_trials=rounding_trials, solver=solver,
                                     output_dir=output_dir).items() if v is not None}
        traffic = self.traffic
        try:
            if epochs is not None:
                prof = traffic.temporal_profile
                if prof is not None and len(prof) != epochs:
                    raise ConfigError(f"epochs: temporal_profile has {len(prof)} entries, expected {epochs}")
                traffic = dataclasses.replace(traffic, epochs=epochs)
            if sigma is not None:
                traffic = dataclasses.replace(traffic, spatial_sigma=float(sigma))
        except ValueError as exc:
            raise ConfigError(f"traffic: {exc}") from None
        return self.replace(traffic=traffic, **ch)

    def to_dict(self) -> dict:
        return {
            "scenario": dataclasses.asdict(self.scenario),
            "channel": dataclasses.asdict(self.channel),
            "traffic": dataclasses.asdict(self.traffic),
            "energy": dataclasses.asdict(self.energy),
            "solver": self.solver,
            "N": self.N,
            "H": self.H,
            "rounding_trials": self.rounding_trials,
            "seed": self.seed,
            "lp_method": self.lp_method,
            "demand_file": self.demand_file,
        }


def _section(cls, data, name: str, base=None):
    if data is None:
        return base if base is not None else cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected an object")
    try:
        if base is not None:
            known = {f.name for f in dataclasses.fields(cls)}
            unknown = set(data) - known
            if unknown:
                raise ValueError(f"unknown field(s): {sorted(unknown)}")
            return dataclasses.replace(base, **data)
        return cls.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def config_from_dict(data: dict, base_dir: Optional[Path] = None) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown top-level field(s): {sorted(unknown)}")
    scenario = _section(MapConfig, data.get("scenario"), "scenario", base=paper_layout())
    channel = _section(LinkBudget, data.get("channel"), "channel")
    tdata = dict(data.get("traffic") or {})
    demand_file = tdata.get("demand_file")
    if demand_file is not None and base_dir is not None:
        demand_file = str((base_dir / demand_file).resolve())
    traffic = _section(TrafficConfig, tdata, "traffic")
    edata = dict(data.get("energy") or {})
    edata.setdefault("epoch_duration", traffic.epoch_duration)
    energy = _section(EnergyParams, edata, "energy")
    rest = {k: data[k] for k in ("solver", "N", "H", "rounding_trials", "seed", "output_dir", "lp_method") if k in data}
    try:
        return RunConfig(scenario=scenario, channel=channel, traffic=traffic, energy=energy,
                         demand_file=demand_file, **rest)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return config_from_dict(data, base_dir=path.parent)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
