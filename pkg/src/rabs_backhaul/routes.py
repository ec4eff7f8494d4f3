"""Hop-bounded routes towards the MBS and the exhaustive route set."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .scenario import ScenarioGraph

DEFAULT_ENUMERATION_CAP = 10**7


class RouteEnumerationOverflow(RuntimeError):
    """The route set is too large to materialise; use column generation."""


@dataclass(frozen=True, order=True)
class Route:
    """Simple path ``source -> ... -> 0``."""

    nodes: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(v) for v in self.nodes))

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def hop_count(self) -> int:
        return len(self.nodes) - 1

    @property
    def sites(self) -> tuple:
        return self.nodes[:-1]

    def edges(self) -> list:
        return [(min(a, b), max(a, b)) for a, b in zip(self.nodes, self.nodes[1:])]

    def validate(self, graph: ScenarioGraph, max_hops: Optional[int] = None) -> None:
        n = self.nodes
        if len(n) < 2:
            raise ValueError(f"route {n} has no edge")
        if n[-1] != 0:
            raise ValueError(f"route {n} does not end at the MBS")
        if n[0] == 0:
            raise ValueError(f"route {n} starts at the MBS")
        if len(set(n)) != len(n):
            raise ValueError(f"route {n} revisits a node")
        if max_hops is not None and self.hop_count > max_hops:
            raise ValueError(f"route {n} exceeds {max_hops} hops")
        for a, b in zip(n, n[1:]):
            if not graph.has_edge(a, b):
                raise ValueError(f"route {n} uses missing edge ({a}, {b})")

    def __str__(self) -> str:
        return "-".join(map(str, self.nodes))


@dataclass
class RouteSet:
    routes: list = field(default_factory=list)
    by_edge: dict = field(default_factory=dict)
    by_source: dict = field(default_factory=dict)

    @classmethod
    def from_routes(cls, routes: Iterable[Route]) -> "RouteSet":
        rs = cls()
        for r in routes:
            rs.add(r)
        return rs

    def __len__(self) -> int:
        return len(self.routes)

    def __iter__(self):
        return iter(self.routes)

    def __contains__(self, route: Route) -> bool:
        return route in self._index

    @property
    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None or len(idx) != len(self.routes):
            idx = {r: k for k, r in enumerate(self.routes)}
            self.__dict__["_idx"] = idx
        return idx

    def add(self, route: Route) -> int:
        """Append ``route`` if new; returns its index either way."""
        idx = self._index
        if route in idx:
            return idx[route]
        k = len(self.routes)
        self.routes.append(route)
        idx[route] = k
        for e in route.edges():
            self.by_edge.setdefault(e, []).append(k)
        self.by_source.setdefault(route.source, []).append(k)
        return k

    def total_hops(self) -> int:
        return sum(r.hop_count for r in self.routes)


def enumerate_routes(graph: ScenarioGraph, max_hops: int, cap: int = DEFAULT_ENUMERATION_CAP) -> RouteSet:
    """Every simple path of at most ``max_hops`` edges ending at the MBS,
    in lexicographic order of node sequence."""
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    adj = graph.neighbors
    found = []
    # grow paths outward from the MBS and store them reversed
    visited = [False] * graph.n_nodes
    visited[0] = True
    path = [0]

    def extend():
        tail = path[-1]
        for v in adj[tail]:
            if visited[v]:
                continue
            path.append(v)
            found.append(tuple(reversed(path)))
            if len(found) > cap:
                raise RouteEnumerationOverflow(
                    f"more than {cap} routes with H={max_hops}; use column generation"
                )
            if len(path) - 1 < max_hops:
                visited[v] = True
                extend()
                visited[v] = False
            path.pop()

    extend()
    found.sort()
    return RouteSet.from_routes(Route(p) for p in found)


def count_routes(graph: ScenarioGraph, max_hops: int) -> int:
    """Size of the route set without materialising it."""
    adj = graph.neighbors
    visited = [False] * graph.n_nodes
    visited[0] = True

    def walk(u: int, depth: int) -> int:
        total = 0
        for v in adj[u]:
            if visited[v]:
                continue
            total += 1
            if depth + 1 < max_hops:
                visited[v] = True
                total += walk(v, depth + 1)
                visited[v] = False
        return total

    return walk(0, 0)


def route_weight(route: Route, edge_weights: Mapping) -> float:
    total = 0.0
    for e in route.edges():
        if e in edge_weights:
            total += edge_weights[e]
        elif (e[1], e[0]) in edge_weights:
            total += edge_weights[(e[1], e[0])]
        else:
            raise KeyError(f"no weight for edge {e} on route {route}")
    return total


def write_routes_csv(routes: Iterable[Route], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["route_id", "source", "node_sequence", "hops"])
        for k, r in enumerate(routes):
            w.writerow([k, r.source, str(r), r.hop_count])
