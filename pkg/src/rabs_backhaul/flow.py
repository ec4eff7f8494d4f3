"""Per-epoch backhaul flow maximisation.

The route-based flow LP is solved by column generation: a restricted master
over an active route subset alternates with a pricing step that looks for a
hop-bounded path whose dual length undercuts its source's threshold. Integer
deployments come from randomized rounding of the LP optimum; an exhaustive
subset oracle provides ground truth on small instances.

Units: flows are in bps, objectives in bits (``eta * sum(f)``). Internally the
master is built in units of ``flow_scale`` bps with objective coefficient 1,
which keeps the simplex well conditioned; duals are converted back so that the
pricing threshold is ``eta - gamma_i`` exactly as in the route-dual
constraint.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .lp_core import LE, LpNumericalError, LpProblem, LpSolution, solve_lp
from .routes import Route, RouteSet, enumerate_routes
from .scenario import ScenarioGraph

logger = logging.getLogger(__name__)

TOL_PRICE = 1e-9
FLOW_TOL = 1e-9


class ColumnGenerationError(LpNumericalError):
    """Column generation hit its iteration cap."""


class OracleBudgetExceeded(RuntimeError):
    """Exhaustive enumeration would exceed its configured budget."""


# -- restricted master -----------------------------------------------------


@dataclass
class MasterState:
    """Active routes plus the latest master LP and its duals (in true units:
    alpha/beta/gamma per bit-per-second of right-hand side, scaled by eta)."""

    routes: RouteSet
    lp: LpProblem
    solution: LpSolution
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: float
    zeta: np.ndarray

    def edge_weights(self) -> np.ndarray:
        return self.alpha + self.beta


class RestrictedMaster:
    """Builder for the route-based flow LP over an active route subset.

    Variables: ``x_1..x_V`` (deployment, columns ``0..V-1``) followed by one
    flow column per active route. Rows, in order:

    * for edge ``k = (i, j)``: row ``2k`` caps flow by ``x_i * R`` (for
      ``i = 0`` the MBS is always on, so the row is a plain capacity cap) and
      row ``2k + 1`` caps it by ``x_j * R``;
    * one demand row per site, ``sum f <= x_i * D_i``;
    * the fleet row ``sum x <= N``.

    With ``deployed`` given, every ``x_i`` is fixed to 1 on that set and 0
    elsewhere, which turns the master into the flow LP of a fixed deployment.
    """

    def __init__(
        self,
        graph: ScenarioGraph,
        demand: np.ndarray,
        n_rabs: Optional[int],
        eta: float,
        deployed: Optional[Iterable[int]] = None,
        flow_scale: Optional[float] = None,
    ):
        self.graph = graph
        self.demand = np.asarray(demand, dtype=float)
        if self.demand.shape != (graph.n_nodes,):
            raise ValueError(f"demand must have one entry per node ({graph.n_nodes})")
        self.n_sites = graph.n_nodes - 1
        self.n_rabs = n_rabs
        self.eta = float(eta)
        self.deployed = None if deployed is None else frozenset(int(i) for i in deployed)
        self.scale = float(flow_scale or (graph.capacity.max() if len(graph.capacity) else 1.0))
        E = len(graph.edges)
        self.n_edge_rows = 2 * E
        self.demand_row0 = 2 * E
        self.fleet_row = 2 * E + self.n_sites
        self.n_rows = self.fleet_row + 1
        self._base = self._base_rows()

    def _base_rows(self) -> tuple:
        V = self.n_sites
        A = np.zeros((self.n_rows, V))
        b = np.zeros(self.n_rows)
        cap = self.graph.capacity / self.scale
        for k, (i, j) in enumerate(self.graph.edges):
            if i == 0:
                b[2 * k] = cap[k]
            else:
                A[2 * k, i - 1] = -cap[k]
            A[2 * k + 1, j - 1] = -cap[k]
        d = self.demand[1:] / self.scale
        A[self.demand_row0 + np.arange(V), np.arange(V)] = -d
        A[self.fleet_row, :] = 1.0
        if self.deployed is None:
            b[self.fleet_row] = self.n_rabs
            lo, hi = np.zeros(V), np.ones(V)
        else:
            b[self.fleet_row] = V
            lo = np.array([1.0 if s in self.deployed else 0.0 for s in range(1, V + 1)])
            hi = lo.copy()
        return A, b, lo, hi

    def route_column(self, route: Route) -> np.ndarray:
        col = np.zeros(self.n_rows)
        for a, b in zip(route.nodes, route.nodes[1:]):
            k = self.graph.edge_id(a, b)
            col[2 * k] = 1.0
            col[2 * k + 1] = 1.0
        col[self.demand_row0 + route.source - 1] = 1.0
        return col

    def build(self, routes: RouteSet) -> LpProblem:
        A0, b, lo0, hi0 = self._base
        cols = [self.route_column(r) for r in routes]
        P = len(cols)
        A = np.hstack([A0, np.array(cols).T]) if P else A0.copy()
        V = self.n_sites
        c = np.concatenate([np.zeros(V), np.ones(P)])
        lo = np.concatenate([lo0, np.zeros(P)])
        hi = np.concatenate([hi0, np.full(P, np.inf)])
        names = [f"x{s}" for s in range(1, V + 1)] + [f"f[{r}]" for r in routes]
        rows = []
        for i, j in self.graph.edges:
            rows += [f"cap_{i}_{j}@{i}", f"cap_{i}_{j}@{j}"]
        rows += [f"dem_{s}" for s in range(1, V + 1)] + ["fleet"]
        return LpProblem(c=c, A=A, b=b, senses=[LE] * self.n_rows, lo=lo, hi=hi,
                         maximize=True, var_names=names, row_names=rows)

    def state(self, routes: RouteSet, lp: LpProblem, sol: LpSolution) -> MasterState:
        y = _clip_duals(sol.duals)
        E = len(self.graph.edges)
        V = self.n_sites
        eta = self.eta
        gamma = np.zeros(self.graph.n_nodes)
        gamma[1:] = eta * y[self.demand_row0:self.demand_row0 + V]
        zeta = np.zeros(self.graph.n_nodes)
        if self.deployed is None:
            zeta[1:] = np.maximum(sol.reduced_costs[:V], 0.0) * eta * self.scale
        return MasterState(
            routes=routes,
            lp=lp,
            solution=sol,
            alpha=eta * y[0:2 * E:2],
            beta=eta * y[1:2 * E:2],
            gamma=gamma,
            delta=eta * self.scale * float(y[self.fleet_row]),
            zeta=zeta,
        )

    def flows(self, routes: RouteSet, sol: LpSolution) -> dict:
        V = self.n_sites
        g = sol.x[V:] * self.scale
        return {r: float(v) for r, v in zip(routes, g) if v > FLOW_TOL * self.scale}


def _clip_duals(y: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    """Duals of <= rows in a maximisation are non-negative; zero out round-off."""
    if np.any(y < -tol * max(1.0, float(np.abs(y).max(initial=0.0)))):
        raise LpNumericalError(f"negative master dual {y.min():.3e}")
    return np.maximum(y, 0.0)


def build_master(graph: ScenarioGraph, demand, routes: RouteSet, n_rabs: int, eta: float) -> LpProblem:
    """Restricted master LP for ``routes`` (see :class:`RestrictedMaster`)."""
    return RestrictedMaster(graph, demand, n_rabs, eta).build(routes)


# -- pricing ---------------------------------------------------------------

SAME_AS_PREVIOUS = -2
UNREACHED = -1


@dataclass
class BellmanFordTable:
    """``u[m - 1, i]`` is the lightest MBS-to-``i`` walk using at most ``m``
    edges. ``parent[m - 1, i]`` is the predecessor achieving it, or
    ``SAME_AS_PREVIOUS`` when level ``m - 1`` was already as good."""

    u: np.ndarray
    parent: np.ndarray

    @property
    def max_hops(self) -> int:
        return self.u.shape[0]

    def distance(self, node: int, hops: Optional[int] = None) -> float:
        m = self.max_hops if hops is None else hops
        return float(self.u[m - 1, node])

    def path(self, node: int) -> Optional[Route]:
        """Recover the optimal route ``node -> ... -> 0`` at the top level."""
        if node == 0 or not np.isfinite(self.u[-1, node]):
            return None
        seq = [node]
        m = self.max_hops - 1
        cur = node
        while cur != 0:
            while self.parent[m, cur] == SAME_AS_PREVIOUS:
                m -= 1
            prev = int(self.parent[m, cur])
            if prev == UNREACHED:
                return None
            seq.append(prev)
            cur = prev
            m -= 1
        return Route(tuple(seq))


def truncated_bellman_ford(graph: ScenarioGraph, edge_weights, max_hops: int) -> BellmanFordTable:
    """Hop-limited shortest paths from the MBS with non-negative edge weights.

    Level 1 holds direct MBS links; level ``m + 1`` relaxes every edge from
    level ``m`` values and keeps the old value unless strictly improved. Stops
    at level ``max_hops``.
    """
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    w = np.asarray(edge_weights, dtype=float)
    if w.shape != (len(graph.edges),):
        raise ValueError("one weight per edge required")
    if np.any(w < 0):
        raise ValueError("edge weights must be non-negative")
    n = graph.n_nodes
    u = np.full((max_hops, n), np.inf)
    parent = np.full((max_hops, n), UNREACHED, dtype=int)
    u[0, 0] = 0.0
    parent[0, 0] = 0
    for k, (i, j) in enumerate(graph.edges):
        if i == 0:
            u[0, j] = w[k]
            parent[0, j] = 0
    adj = graph.neighbors
    eid = graph.edge_index
    for m in range(1, max_hops):
        prev = u[m - 1]
        cur = prev.copy()
        par = np.full(n, SAME_AS_PREVIOUS, dtype=int)
        for v in range(1, n):
            best = cur[v]
            for a in adj[v]:
                ua = prev[a]
                if not np.isfinite(ua):
                    continue
                cand = ua + w[eid[(min(a, v), max(a, v))]]
                if cand < best:
                    best = cand
                    par[v] = a
            cur[v] = best
        par[0] = SAME_AS_PREVIOUS
        u[m] = cur
        parent[m] = par
    return BellmanFordTable(u, parent)


def price_routes(state: MasterState, graph: ScenarioGraph, max_hops: int, eta: float,
                 tol_price: float = TOL_PRICE) -> list:
    """Routes with positive reduced cost: for each site ``i`` whose hop-bounded
    dual distance is below ``eta - gamma_i`` (less a tolerance of
    ``tol_price * eta``), the path that attains it. An empty list certifies
    that the restricted master is optimal over every hop-bounded route."""
    table = truncated_bellman_ford(graph, state.edge_weights(), max_hops)
    out = []
    for i in graph.sites:
        if table.u[-1, i] < eta - state.gamma[i] - tol_price * eta:
            route = table.path(i)
            if route is None:
                raise RuntimeError(f"pricing found distance for site {i} but no path")
            try:
                route.validate(graph, max_hops)
            except ValueError as exc:
                raise RuntimeError(f"path recovery produced an invalid route: {exc}") from exc
            out.append(route)
    return out


def pricing_violations(state: MasterState, graph: ScenarioGraph, max_hops: int, eta: float) -> np.ndarray:
    """``eta - gamma_i - u_i`` per node (positive means a violated route exists)."""
    table = truncated_bellman_ford(graph, state.edge_weights(), max_hops)
    return eta - state.gamma - table.u[-1]


# -- column generation -----------------------------------------------------


def min_hop_path(graph: ScenarioGraph, site: int, dist: Optional[np.ndarray] = None) -> Optional[Route]:
    """Fewest-hop route from ``site`` to the MBS; among those, the
    lexicographically smallest node sequence."""
    if dist is None:
        dist = hop_distances(graph)
    if not np.isfinite(dist[site]) or site == 0:
        return None
    seq = [site]
    cur = site
    while cur != 0:
        cur = min(v for v in graph.neighbors[cur] if dist[v] == dist[cur] - 1)
        seq.append(cur)
    return Route(tuple(seq))


def hop_distances(graph: ScenarioGraph) -> np.ndarray:
    dist = np.full(graph.n_nodes, np.inf)
    dist[0] = 0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in graph.neighbors[u]:
            if not np.isfinite(dist[v]):
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


@dataclass
class FractionalFlowSolution:
    x: np.ndarray
    flows: dict
    objective: float
    routes: RouteSet
    state: MasterState
    iterations: int = 0
    trace: list = field(default_factory=list)
    total_routes: Optional[int] = None

    @property
    def active_routes(self) -> int:
        return len(self.routes)

    @property
    def scale_reduction(self) -> Optional[float]:
        if not self.total_routes:
            return None
        return 1.0 - len(self.routes) / self.total_routes


def initial_routes(graph: ScenarioGraph, max_hops: int) -> RouteSet:
    dist = hop_distances(graph)
    rs = RouteSet()
    for s in graph.sites:
        if dist[s] <= max_hops:
            rs.add(min_hop_path(graph, s, dist))
    return rs


def solve_flow_lp_cg(
    graph: ScenarioGraph,
    demand,
    n_rabs: Optional[int],
    max_hops: int,
    eta: float,
    *,
    deployed: Optional[Iterable[int]] = None,
    max_iter: Optional[int] = None,
    lp_method: str = "simplex",
    tol_price: float = TOL_PRICE,
    total_routes: Optional[int] = None,
) -> FractionalFlowSolution:
    """LP relaxation of the epoch flow problem by column generation.

    With ``deployed`` the deployment is fixed and only flows are optimised on
    the subgraph induced by the deployed sites.
    """
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    if deployed is not None:
        deployed = frozenset(deployed)
        graph = graph.induced(deployed)
    master = RestrictedMaster(graph, demand, n_rabs, eta, deployed=deployed)
    routes = initial_routes(graph, max_hops)
    if max_iter is None:
        max_iter = 10 * max(graph.n_nodes - 1, 1) * max_hops
    trace = []
    basis = None
    for it in range(1, max_iter + 1):
        lp = master.build(routes)
        sol = solve_lp(lp, method=lp_method, warm_start=basis)
        if not sol.optimal:
            raise LpNumericalError(f"restricted master is {sol.status.value}")
        state = master.state(routes, lp, sol)
        new = [r for r in price_routes(state, graph, max_hops, eta, tol_price) if r not in routes]
        objective = eta * master.scale * sol.objective
        trace.append({"iteration": it, "routes": len(routes), "objective": objective, "violations": len(new)})
        if not new:
            break
        for r in new:
            routes.add(r)
        basis = sol.basis
    else:
        raise ColumnGenerationError(f"column generation did not converge in {max_iter} iterations")
    x = np.zeros(graph.n_nodes)
    x[0] = 1.0
    x[1:] = sol.x[:master.n_sites]
    return FractionalFlowSolution(
        x=x,
        flows=master.flows(routes, sol),
        objective=objective,
        routes=routes,
        state=state,
        iterations=it,
        trace=trace,
        total_routes=total_routes,
    )


def solve_flow_lp_full(graph: ScenarioGraph, demand, n_rabs: Optional[int], max_hops: int, eta: float,
                       *, deployed=None, routes: Optional[RouteSet] = None, lp_method: str = "simplex"):
    """Same LP with every hop-bounded route materialised (no pricing)."""
    if deployed is not None:
        deployed = frozenset(deployed)
        graph = graph.induced(deployed)
    if routes is None:
        routes = enumerate_routes(graph, max_hops)
    master = RestrictedMaster(graph, demand, n_rabs, eta, deployed=deployed)
    lp = master.build(routes)
    sol = solve_lp(lp, method=lp_method)
    if not sol.optimal:
        raise LpNumericalError(f"full flow LP is {sol.status.value}")
    x = np.zeros(graph.n_nodes)
    x[0] = 1.0
    x[1:] = sol.x[:master.n_sites]
    return FractionalFlowSolution(
        x=x,
        flows=master.flows(routes, sol),
        objective=eta * master.scale * sol.objective,
        routes=routes,
        state=master.state(routes, lp, sol),
        total_routes=len(routes),
    )


# -- integer deployments ---------------------------------------------------


@dataclass
class EpochDeployment:
    deployed: tuple
    flows: dict
    served_bits: float

    @property
    def served_rate(self) -> float:
        return float(sum(self.flows.values()))

    def to_dict(self) -> dict:
        return {
            "deployed": list(self.deployed),
            "served_bits": self.served_bits,
            "flows": [{"route": str(r), "bps": f} for r, f in sorted(self.flows.items())],
        }


def solve_fixed_deployment(graph: ScenarioGraph, demand, deployed: Iterable[int], max_hops: int, eta: float,
                           *, method: str = "cg", lp_method: str = "simplex") -> EpochDeployment:
    """Maximum flow when exactly the sites in ``deployed`` carry RABSs."""
    deployed = tuple(sorted(set(int(i) for i in deployed)))
    if not deployed:
        return EpochDeployment((), {}, 0.0)
    if method == "cg":
        sol = solve_flow_lp_cg(graph, demand, None, max_hops, eta, deployed=deployed, lp_method=lp_method)
    elif method == "enumerate":
        sol = solve_flow_lp_full(graph, demand, None, max_hops, eta, deployed=deployed, lp_method=lp_method)
    else:
        raise ValueError(f"unknown method {method!r}")
    return EpochDeployment(deployed, sol.flows, sol.objective)


def randomized_rounding(
    fractional: FractionalFlowSolution,
    graph: ScenarioGraph,
    demand,
    n_rabs: int,
    max_hops: int,
    eta: float,
    trials: int = 50,
    rng=None,
    lp_method: str = "simplex",
) -> EpochDeployment:
    """Round an LP-relaxation flow into an integer deployment of at most N sites.

    Each trial draws the positive-flow routes without replacement with
    probability proportional to ``f_p / D_source`` (renormalised after each
    draw) and keeps a route when the union of sites it traverses still fits
    in N; the flows are then re-optimised on the selected sites. The best
    trial by served bits wins, earliest trial on ties.
    """
    rng = np.random.default_rng(rng)
    demand = np.asarray(demand, dtype=float)
    cand = [(r, f) for r, f in sorted(fractional.flows.items()) if f > 0 and demand[r.source] > 0]
    if not cand:
        return EpochDeployment((), {}, 0.0)
    weights = np.array([f / demand[r.source] for r, f in cand])
    cache = {}
    best = None
    for _ in range(trials):
        # Efraimidis-Spirakis keys give sequential weighted sampling without replacement
        keys = np.log(rng.random(len(cand))) / weights
        order = np.argsort(-keys, kind="stable")
        chosen: set = set()
        for k in order:
            merged = chosen.union(cand[k][0].sites)
            if len(merged) <= n_rabs:
                chosen = merged
                if len(chosen) == n_rabs:
                    break
        key = frozenset(chosen)
        if key not in cache:
            cache[key] = solve_fixed_deployment(graph, demand, key, max_hops, eta, lp_method=lp_method)
        dep = cache[key]
        if best is None or dep.served_bits > best.served_bits * (1 + 1e-12):
            best = dep
    if len(best.deployed) < n_rabs:
        logger.debug("rounding deployed %d of %d RABSs", len(best.deployed), n_rabs)
    return best


def _subset_count(n: int, k: int) -> int:
    return sum(math.comb(n, r) for r in range(0, min(k, n) + 1))


def enumerate_deployments(graph: ScenarioGraph, demand, n_rabs: int, max_hops: int, eta: float,
                          budget: int = 10**6, lp_method: str = "simplex", include_empty: bool = False):
    """Yield an optimal-flow :class:`EpochDeployment` for every site subset of
    size at most N, smallest subsets first, lexicographic within a size."""
    sites = list(graph.sites)
    count = _subset_count(len(sites), n_rabs)
    if count > budget:
        raise OracleBudgetExceeded(f"{count} subsets exceed the oracle budget of {budget}")
    all_routes = enumerate_routes(graph, max_hops) if sites else RouteSet()
    if include_empty:
        yield EpochDeployment((), {}, 0.0)
    for k in range(1, min(n_rabs, len(sites)) + 1):
        for subset in itertools.combinations(sites, k):
            s = set(subset)
            inside = RouteSet.from_routes(r for r in all_routes if s.issuperset(r.sites))
            if not len(inside):
                yield EpochDeployment(subset, {}, 0.0)
                continue
            sol = solve_flow_lp_full(graph, demand, None, max_hops, eta, deployed=subset,
                                     routes=inside, lp_method=lp_method)
            yield EpochDeployment(subset, sol.flows, sol.objective)


def exact_flow_oracle(graph: ScenarioGraph, demand, n_rabs: int, max_hops: int, eta: float,
                      budget: int = 10**6, lp_method: str = "simplex") -> EpochDeployment:
    """Best integer deployment by exhaustive subset enumeration.

    Every subset of at most N sites is scored by the flow LP over its fully
    enumerated routes; smaller and lexicographically earlier subsets win ties.
    """
    best = EpochDeployment((), {}, 0.0)
    for dep in enumerate_deployments(graph, demand, n_rabs, max_hops, eta, budget, lp_method):
        if dep.served_bits > best.served_bits * (1 + 1e-12) + 1e-9:
            best = dep
    return best
