"""mmWave line-of-sight link budget and per-edge rate capacity."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

THERMAL_NOISE_DBM_HZ = -174.0
SNR_BACKOFF_DB = 3.0


@dataclass(frozen=True)
class LinkBudget:
    """Link-budget constants for a noise-limited LoS backhaul link.

    Defaults follow a 73 GHz / 200 MHz street-level deployment. The path-loss
    intercept and exponent are a free-space-like LoS fit; antenna gains and
    noise figure are reconstructions and should be overridden when measured
    values are available.
    """

    carrier_freq: float = 73e9
    bandwidth: float = 200e6
    se_max: float = 4.8
    tx_power: float = 10.0
    antenna_gain_tx: float = 25.0
    antenna_gain_rx: float = 25.0
    noise_figure: float = 7.0
    pl_intercept: float = 69.8
    pl_exponent: float = 2.0

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.se_max <= 0:
            raise ValueError("se_max must be positive")
        if self.tx_power <= 0:
            raise ValueError("tx_power must be positive")
        if self.pl_exponent < 1:
            raise ValueError("pl_exponent must be >= 1")
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "LinkBudget":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown channel field(s): {sorted(unknown)}")
        return cls(**data)

    @property
    def peak_rate(self) -> float:
        return self.bandwidth * self.se_max


def path_loss_db(distance: float, budget: LinkBudget) -> float:
    """Log-distance path loss ``alpha + 10 * beta * log10(d)`` in dB."""
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return budget.pl_intercept + 10.0 * budget.pl_exponent * math.log10(distance)


def noise_power_dbm(budget: LinkBudget) -> float:
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(budget.bandwidth) + budget.noise_figure


def snr_db(distance: float, budget: LinkBudget) -> float:
    tx_dbm = 10.0 * math.log10(budget.tx_power * 1000.0)
    rx_dbm = (
        tx_dbm
        + budget.antenna_gain_tx
        + budget.antenna_gain_rx
        - path_loss_db(distance, budget)
    )
    return rx_dbm - noise_power_dbm(budget)


def link_capacity(snr: float, budget: LinkBudget) -> float:
    """Rate capacity in bps with a 3 dB SNR backoff and spectral-efficiency cap."""
    if not math.isfinite(snr):
        raise ValueError(f"snr must be finite, got {snr}")
    if snr - SNR_BACKOFF_DB >= 10.0 * math.log10(2.0**budget.se_max - 1.0):
        return budget.peak_rate  # cap binds; also avoids overflow at tiny distances
    se = math.log2(1.0 + 10.0 ** (0.1 * (snr - SNR_BACKOFF_DB)))
    return budget.bandwidth * min(se, budget.se_max)


def capacity_at(distance: float, budget: LinkBudget) -> float:
    return link_capacity(snr_db(distance, budget), budget)


def max_link_range(budget: LinkBudget, min_rate: float = 1e6) -> float:
    """Distance (m) at which the capacity drops to ``min_rate`` bps.

    Inverts the capacity formula analytically: the SNR giving ``min_rate`` is
    solved first, then the path loss that produces it.
    """
    if min_rate >= budget.peak_rate:
        raise ValueError("min_rate must be below the spectral-efficiency cap")
    se = min_rate / budget.bandwidth
    snr_needed = SNR_BACKOFF_DB + 10.0 * math.log10(2.0**se - 1.0)
    tx_dbm = 10.0 * math.log10(budget.tx_power * 1000.0)
    pl_allowed = (
        tx_dbm + budget.antenna_gain_tx + budget.antenna_gain_rx
        - noise_power_dbm(budget) - snr_needed
    )
    return 10.0 ** ((pl_allowed - budget.pl_intercept) / (10.0 * budget.pl_exponent))
