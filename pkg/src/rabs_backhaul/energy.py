"""Relocation planning between epochs and the energy-efficiency metric.

Each of the N RABSs has an identity. At a transition the RABSs (rows) are
assigned to the next epoch's deployed sites plus idle slots (columns); a RABS
sent to an idle slot stays where it is at no flight cost. Static transmission
and grasping energy is charged for all N RABSs in every epoch.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .lp_core import EQ, LpNumericalError, LpProblem, solve_lp

INTEGRALITY_TOL = 1e-9


class IntegralityError(LpNumericalError):
    """Assignment LP returned a fractional vertex."""


@dataclass(frozen=True)
class EnergyParams:
    propulsion_power: float = 162.0
    flight_speed: float = 18.0
    tx_power: float = 10.0
    grasp_power: float = 10.0
    epoch_duration: float = 3600.0
    depot: Optional[int] = 0  # None: RABSs start on the first epoch's sites

    def __post_init__(self):
        for name in ("propulsion_power", "flight_speed", "tx_power", "grasp_power", "epoch_duration"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.depot is not None and self.depot < 0:
            raise ValueError("depot must be a node id")

    @classmethod
    def from_dict(cls, data: dict) -> "EnergyParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown energy field(s): {sorted(unknown)}")
        return cls(**data)

    @property
    def static_power(self) -> float:
        return self.tx_power + self.grasp_power

    def static_energy(self, n_rabs: int, epochs: int) -> float:
        return n_rabs * epochs * self.static_power * self.epoch_duration


def flight_energy(a, b, params: EnergyParams) -> float:
    d = math.dist(tuple(map(float, a)), tuple(map(float, b)))
    return params.propulsion_power * d / params.flight_speed


def assignment_lp(cost: np.ndarray):
    """Solve the square assignment LP with the in-house simplex.

    Returns ``(y, value)`` with ``y`` the raw LP vertex, certified to lie
    within ``INTEGRALITY_TOL`` of 0/1 (the constraint matrix is the incidence
    matrix of a bipartite graph, so every vertex is integral).
    """
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    if cost.shape != (n, n):
        raise ValueError("cost matrix must be square")
    if n == 0:
        return np.zeros((0, 0)), 0.0
    A = np.zeros((2 * n, n * n))
    for r in range(n):
        A[r, r * n:(r + 1) * n] = 1.0
        A[n + r, r::n] = 1.0
    lp = LpProblem(c=cost.ravel(), A=A, b=np.ones(2 * n), senses=[EQ] * (2 * n),
                   lo=np.zeros(n * n), hi=np.ones(n * n), maximize=False)
    sol = solve_lp(lp)
    if not sol.optimal:
        raise LpNumericalError(f"assignment LP is {sol.status.value}")
    y = sol.x.reshape(n, n)
    frac = np.abs(y - np.round(y)).max()
    if frac > INTEGRALITY_TOL:
        raise IntegralityError(f"assignment LP vertex is fractional (max deviation {frac:.3e})")
    return y, float(sol.objective)


def assignment_hungarian(cost: np.ndarray):
    cost = np.asarray(cost, dtype=float)
    rows, cols = linear_sum_assignment(cost)
    y = np.zeros_like(cost)
    y[rows, cols] = 1.0
    return y, float(cost[rows, cols].sum())


_SOLVERS = {"lp": assignment_lp, "hungarian": assignment_hungarian}


@dataclass(frozen=True)
class Move:
    rabs: int
    origin: int
    target: int
    distance: float
    energy: float
    active: bool


@dataclass
class RelocationPlan:
    """``transitions[k]`` holds the moves into epoch ``k`` (from the depot for
    ``k = 0`` when a depot is used, otherwise the first transition is empty)."""

    transitions: list
    flight_energy_total: float
    static_energy_total: float
    n_rabs: int
    served_bits: float = 0.0
    positions: list = field(default_factory=list)

    @property
    def total_energy(self) -> float:
        return self.flight_energy_total + self.static_energy_total

    @property
    def ee(self) -> float:
        return self.served_bits / self.total_energy

    @property
    def moves(self) -> list:
        """Per transition, the ``(from, to)`` pairs of RABSs that serve a site."""
        return [[(m.origin, m.target) for m in tr if m.active] for tr in self.transitions]

    def to_dict(self) -> dict:
        return {
            "n_rabs": self.n_rabs,
            "flight_energy_J": self.flight_energy_total,
            "static_energy_J": self.static_energy_total,
            "served_bits": self.served_bits,
            "ee_bits_per_J": self.ee,
            "transitions": [
                [{"rabs": m.rabs, "from": m.origin, "to": m.target, "flight_J": m.energy, "active": m.active}
                 for m in tr]
                for tr in self.transitions
            ],
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["transition", "rabs_id", "from_site", "to_site", "flight_m", "flight_J"])
            for t, tr in enumerate(self.transitions):
                for m in tr:
                    w.writerow([t, m.rabs, m.origin, m.target, repr(m.distance), repr(m.energy)])


def _transition(positions: list, targets: Sequence[int], coords: np.ndarray, params: EnergyParams,
                solver: str) -> tuple:
    n = len(positions)
    k = len(targets)
    cost = np.zeros((n, n))
    if k:
        dist = np.linalg.norm(coords[positions][:, None, :] - coords[list(targets)][None, :, :], axis=2)
        cost[:, :k] = params.propulsion_power * dist / params.flight_speed
    y, _ = _SOLVERS[solver](cost)
    moves = []
    new_pos = list(positions)
    total = 0.0
    for r in range(n):
        col = int(np.argmax(y[r]))
        if col < k:
            target = int(targets[col])
            d = float(np.linalg.norm(coords[positions[r]] - coords[target]))
            e = float(cost[r, col])
            moves.append(Move(r, positions[r], target, d, e, True))
            new_pos[r] = target
            total += e
        else:
            moves.append(Move(r, positions[r], positions[r], 0.0, 0.0, False))
    return moves, new_pos, total


def plan_relocations(deployed_sets: Sequence[Sequence[int]], coords, params: EnergyParams, n_rabs: int,
                     *, served_bits: float = 0.0, solver: str = "lp") -> RelocationPlan:
    """Minimum-flight relocation between consecutive epoch deployments.

    ``coords[i]`` is the position of node ``i``. Each transition is solved as
    a separate assignment problem (``solver="lp"`` certifies integrality of
    the LP vertex; ``"hungarian"`` is the fast equivalent).
    """
    if n_rabs < 1:
        raise ValueError("n_rabs must be >= 1")
    if solver not in _SOLVERS:
        raise ValueError(f"unknown assignment solver {solver!r}")
    coords = np.asarray(coords, dtype=float)
    sets = [sorted(set(int(i) for i in s)) for s in deployed_sets]
    if not sets:
        raise ValueError("need at least one epoch")
    for t, s in enumerate(sets):
        if len(s) > n_rabs:
            raise ValueError(f"epoch {t} deploys {len(s)} sites with only {n_rabs} RABSs")
    transitions = []
    flight = 0.0
    if params.depot is not None:
        if not 0 <= params.depot < len(coords):
            raise ValueError(f"depot {params.depot} is not a node")
        positions = [params.depot] * n_rabs
        start = 0
    else:
        # RABSs begin on the first epoch's sites, spares parked at node 0
        positions = sets[0] + [0] * (n_rabs - len(sets[0]))
        transitions.append([Move(r, p, p, 0.0, 0.0, r < len(sets[0])) for r, p in enumerate(positions)])
        start = 1
    trail = [list(positions)] if start else []
    for t in range(start, len(sets)):
        moves, positions, e = _transition(positions, sets[t], coords, params, solver)
        transitions.append(moves)
        trail.append(list(positions))
        flight += e
    return RelocationPlan(
        transitions=transitions,
        flight_energy_total=flight,
        static_energy_total=params.static_energy(n_rabs, len(sets)),
        n_rabs=n_rabs,
        served_bits=float(served_bits),
        positions=trail,
    )


def energy_efficiency(served_bits: float, plan: RelocationPlan, params: EnergyParams, n_rabs: int,
                      epochs: int) -> float:
    """Delivered bits per joule of flight, transmission and grasping energy."""
    denom = plan.flight_energy_total + params.static_energy(n_rabs, epochs)
    return float(served_bits) / denom
