"""Independent feasibility checks for planner output.

Nothing here reuses the solver data structures beyond reading them: edge
capacities are recomputed from node positions and the link budget, and every
constraint is re-derived from raw routes, flows and deployments.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from typing import Optional, Sequence

import numpy as np

from .channel import LinkBudget, capacity_at
from .scenario import ScenarioGraph, line_of_sight

REL_TOL = 1e-7
ABS_TOL = 1e-3  # bps


class FeasibilityError(AssertionError):
    pass


def _cap_ok(total: float, cap: float) -> bool:
    return total <= cap * (1 + REL_TOL) + ABS_TOL


def check_epoch(graph: ScenarioGraph, demand: Sequence[float], deployed, flows: dict, n_rabs: Optional[int],
                max_hops: int, eta: float, served_bits: Optional[float] = None,
                budget: Optional[LinkBudget] = None) -> list:
    """Violations of per-edge capacity, per-site demand, the fleet size and
    route validity for one epoch. Empty list means feasible."""
    errors = []
    dep = set(int(i) for i in deployed)
    if n_rabs is not None and len(dep) > n_rabs:
        errors.append(f"{len(dep)} sites deployed with {n_rabs} RABSs")
    if 0 in dep or any(not 1 <= i < graph.n_nodes for i in dep):
        errors.append(f"deployment {sorted(dep)} contains non-site nodes")
    pos = np.asarray(graph.positions, dtype=float)
    edge_load = defaultdict(float)
    src_load = defaultdict(float)
    for route, f in flows.items():
        nodes = list(route.nodes)
        if f < -ABS_TOL:
            errors.append(f"negative flow {f} on {route}")
        if len(nodes) < 2 or nodes[-1] != 0 or nodes[0] == 0 or len(set(nodes)) != len(nodes):
            errors.append(f"{route} is not a simple site-to-MBS path")
            continue
        if len(nodes) - 1 > max_hops:
            errors.append(f"{route} exceeds {max_hops} hops")
        if not set(nodes[:-1]) <= dep:
            errors.append(f"{route} crosses undeployed sites {sorted(set(nodes[:-1]) - dep)}")
        for a, b in zip(nodes, nodes[1:]):
            key = (min(a, b), max(a, b))
            if not graph.has_edge(*key):
                errors.append(f"{route} uses non-edge {key}")
            elif budget is not None and not line_of_sight(pos[a], pos[b], graph.buildings):
                errors.append(f"{route} uses obstructed link {key}")
            edge_load[key] += f
        src_load[nodes[0]] += f
    for key, load in edge_load.items():
        if not graph.has_edge(*key):
            continue
        if budget is not None:
            cap = capacity_at(float(np.linalg.norm(pos[key[0]] - pos[key[1]])), budget)
        else:
            cap = graph.capacity_of(*key)
        if not _cap_ok(load, cap):
            errors.append(f"edge {key} carries {load:.6g} bps > capacity {cap:.6g}")
    for s, load in src_load.items():
        if not _cap_ok(load, float(demand[s])):
            errors.append(f"site {s} sends {load:.6g} bps > demand {float(demand[s]):.6g}")
    if served_bits is not None:
        expect = eta * sum(flows.values())
        if abs(served_bits - expect) > REL_TOL * max(1.0, abs(expect)) + eta * ABS_TOL:
            errors.append(f"served bits {served_bits} differ from eta*sum(f) = {expect}")
    return errors


def check_plan(deployed_sets: Sequence, plan, n_rabs: int, coords, depot: Optional[int],
               propulsion_power: float, flight_speed: float) -> list:
    """Degree constraints of every transition and the flight-energy ledger."""
    errors = []
    coords = np.asarray(coords, dtype=float)
    if len(plan.transitions) != len(deployed_sets):
        return [f"plan has {len(plan.transitions)} transitions for {len(deployed_sets)} epochs"]
    if depot is not None:
        prev = [depot] * n_rabs
    else:
        prev = None
    flight = 0.0
    for t, (moves, dep) in enumerate(zip(plan.transitions, deployed_sets)):
        if len(moves) != n_rabs or sorted(m.rabs for m in moves) != list(range(n_rabs)):
            errors.append(f"transition {t}: every RABS must move exactly once")
            continue
        dests = Counter(m.target for m in moves if m.active)
        if dests != Counter(int(i) for i in dep):
            errors.append(f"transition {t}: destinations {sorted(dests.elements())} != deployment {sorted(dep)}")
        if prev is not None:
            origins = [None] * n_rabs
            for m in moves:
                origins[m.rabs] = m.origin
            if origins != prev:
                errors.append(f"transition {t}: origins do not match previous positions")
        for m in moves:
            if not m.active and m.origin != m.target:
                errors.append(f"transition {t}: idle RABS {m.rabs} moved")
            e = propulsion_power * float(np.linalg.norm(coords[m.origin] - coords[m.target])) / flight_speed
            if abs(e - m.energy) > 1e-6 * max(1.0, e):
                errors.append(f"transition {t}: RABS {m.rabs} flight energy {m.energy} != {e}")
            flight += e
        prev = [None] * n_rabs
        for m in moves:
            prev[m.rabs] = m.target
    if abs(flight - plan.flight_energy_total) > 1e-6 * max(1.0, flight):
        errors.append(f"flight energy total {plan.flight_energy_total} != {flight}")
    return errors


def check_result(result, graph: ScenarioGraph, demand_matrix, max_hops: int, eta: float,
                 budget: Optional[LinkBudget] = None, params=None) -> list:
    """All epoch and relocation checks for a solver result."""
    errors = []
    n = result.n_rabs
    for t, dep in enumerate(result.deployments):
        d = demand_matrix.epoch(t)
        errors += [f"epoch {t}: {e}" for e in check_epoch(
            graph, d, dep.deployed, dep.flows, None if result.dense else n, max_hops, eta,
            dep.served_bits, budget)]
    if params is not None and result.plan is not None and not result.dense:
        errors += check_plan([d.deployed for d in result.deployments], result.plan, n, graph.positions,
                             params.depot, params.propulsion_power, params.flight_speed)
    return errors


def assert_feasible(errors: list) -> None:
    if errors:
        raise FeasibilityError("; ".join(errors[:10]) + (f" (+{len(errors) - 10} more)" if len(errors) > 10 else ""))
