"""Spatio-temporal traffic demand per candidate site and epoch."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from typing import Optional, Sequence

import numpy as np


def diurnal_profile(epochs: int, start_hour: float = 9.0, epoch_hours: float = 1.0) -> tuple:
    """Two-peak daily demand shape (late morning and evening), max 1.

    Epoch ``t`` is evaluated at its mid-point hour.
    """
    hours = start_hour + epoch_hours * (np.arange(epochs) + 0.5)
    h = np.mod(hours, 24.0)
    shape = (
        0.25
        + 0.75 * np.exp(-0.5 * ((h - 11.0) / 2.5) ** 2)
        + 0.9 * np.exp(-0.5 * ((h - 20.0) / 2.5) ** 2)
    )
    return tuple(float(v) for v in shape / 1.15)


@dataclass(frozen=True)
class TrafficConfig:
    epochs: int = 4
    epoch_duration: float = 3600.0
    # defaults calibrated on the paper-layout map so that demand is strongly
    # heterogeneous and roughly half the sites carry most of it
    base_demand: float = 100e6
    spatial_sigma: float = 2.0
    temporal_profile: Optional[tuple] = None
    rng_seed: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.epoch_duration > 0:
            raise ValueError("epoch_duration must be positive")
        if self.spatial_sigma < 0:
            raise ValueError("spatial_sigma must be non-negative")
        if self.base_demand < 0:
            raise ValueError("base_demand must be non-negative")
        if self.temporal_profile is not None:
            prof = tuple(float(v) for v in self.temporal_profile)
            if len(prof) != self.epochs:
                raise ValueError(f"temporal_profile has {len(prof)} entries, expected {self.epochs}")
            if any(v < 0 for v in prof):
                raise ValueError("temporal_profile multipliers must be non-negative")
            object.__setattr__(self, "temporal_profile", prof)

    @classmethod
    def from_dict(cls, data: dict) -> "TrafficConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known - {"demand_file"}
        if unknown:
            raise ValueError(f"unknown traffic field(s): {sorted(unknown)}")
        return cls(**{k: v for k, v in data.items() if k != "demand_file"})

    def profile(self) -> tuple:
        if self.temporal_profile is not None:
            return self.temporal_profile
        return diurnal_profile(self.epochs)


@dataclass(frozen=True)
class DemandMatrix:
    """``values[k, t]`` is the demand (bps) of site ``k + 1`` in epoch ``t``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, ndmin=2)
        if v.ndim != 2:
            raise ValueError("demand matrix must be 2-D (sites x epochs)")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("demands must be finite and non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_sites(self) -> int:
        return self.values.shape[0]

    @property
    def epochs(self) -> int:
        return self.values.shape[1]

    def epoch(self, t: int) -> np.ndarray:
        """Demand vector indexed by node id (entry 0, the MBS, is zero)."""
        return np.concatenate([[0.0], self.values[:, t]])

    def total(self) -> float:
        return float(self.values.sum())


def spatial_field(n_sites: int, sigma: float, seed: int) -> np.ndarray:
    """Log-normal per-site multipliers with median 1 and log-std ``sigma``."""
    z = np.random.default_rng(seed).standard_normal(n_sites)
    return np.exp(sigma * z)


def generate_demand(n_sites: int, cfg: TrafficConfig) -> DemandMatrix:
    s = spatial_field(n_sites, cfg.spatial_sigma, cfg.rng_seed)
    prof = np.asarray(cfg.profile())
    return DemandMatrix(cfg.base_demand * np.outer(s, prof))


def read_demand_csv(path, n_sites: int, epochs: int) -> DemandMatrix:
    """Load ``site_id,epoch,demand_bps`` rows; site ids are node ids (1-based),
    epochs are 0-based. Missing entries are zero."""
    v = np.zeros((n_sites, epochs))
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"site_id", "epoch", "demand_bps"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"{path}: header must contain {sorted(need)}")
        for line, row in enumerate(reader, start=2):
            try:
                i, t, d = int(row["site_id"]), int(row["epoch"]), float(row["demand_bps"])
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line}: {exc}") from None
            if not 1 <= i <= n_sites or not 0 <= t < epochs:
                raise ValueError(f"{path}:{line}: site {i} / epoch {t} out of range")
            if d < 0 or not math.isfinite(d):
                raise ValueError(f"{path}:{line}: demand must be finite and non-negative")
            v[i - 1, t] = d
    return DemandMatrix(v)


def write_demand_csv(demand: DemandMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["site_id", "epoch", "demand_bps"])
        for k in range(demand.n_sites):
            for t in range(demand.epochs):
                w.writerow([k + 1, t, repr(float(demand.values[k, t]))])
