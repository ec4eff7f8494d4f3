"""Manhattan-type street map, candidate grasping sites and the LoS backhaul graph.

Node 0 is always the macro base station (MBS); nodes ``1..n`` are candidate
lamppost sites. Buildings are axis-aligned rectangles ``(x0, y0, x1, y1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .channel import LinkBudget, capacity_at, max_link_range

GEOM_TOL = 1e-9

Rect = tuple  # (x0, y0, x1, y1)


@dataclass(frozen=True)
class MapConfig:
    """Street-grid geometry.

    Blocks of ``block_size`` are separated by roads of ``road_width``, starting
    with a block at the origin, so ``n * block + (n - 1) * road`` must equal
    the area side. Lampposts sit on curb lines ``curb_offset`` metres from the
    building faces, every ``lamppost_spacing`` metres starting at
    ``lamppost_phase``; positions that fall inside a crossing road are skipped.
    """

    area_width: float = 300.0
    area_height: float = 300.0
    block_size: float = 90.0
    road_width: float = 15.0
    lamppost_spacing: float = 50.0
    lamppost_phase: float = 5.0
    curb_offset: float = 0.0
    mbs_position: tuple = (105.0, 202.5)
    max_link_range: Optional[float] = None

    def __post_init__(self):
        for name in ("area_width", "area_height", "block_size", "lamppost_spacing"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.road_width < 0:
            raise ValueError("road_width must be non-negative")
        if self.curb_offset < 0 or 2 * self.curb_offset > self.road_width:
            raise ValueError("curb_offset must lie within half a road width")
        if self.max_link_range is not None and not self.max_link_range > 0:
            raise ValueError("max_link_range must be positive")
        object.__setattr__(self, "mbs_position", tuple(float(v) for v in self.mbs_position))
        if len(self.mbs_position) != 2:
            raise ValueError("mbs_position must be a 2D point")
        self.blocks_x
        self.blocks_y
        mx, my = self.mbs_position
        if not (0 <= mx <= self.area_width and 0 <= my <= self.area_height):
            raise ValueError("mbs_position lies outside the map")
        if any(_strictly_inside(self.mbs_position, r) for r in self.buildings()):
            raise ValueError(f"mbs_position {self.mbs_position} lies inside a building")

    @classmethod
    def from_dict(cls, data: dict) -> "MapConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario field(s): {sorted(unknown)}")
        return cls(**data)

    def _block_count(self, side: float) -> int:
        pitch = self.block_size + self.road_width
        n = (side + self.road_width) / pitch
        k = round(n)
        if k < 1 or abs(n - k) > 1e-9:
            raise ValueError(
                f"blocks of {self.block_size} m and roads of {self.road_width} m do not tile {side} m"
            )
        return k

    @property
    def blocks_x(self) -> int:
        return self._block_count(self.area_width)

    @property
    def blocks_y(self) -> int:
        return self._block_count(self.area_height)

    def buildings(self) -> list:
        pitch = self.block_size + self.road_width
        b = self.block_size
        return [
            (i * pitch, j * pitch, i * pitch + b, j * pitch + b)
            for j in range(self.blocks_y)
            for i in range(self.blocks_x)
        ]

    def road_bands(self, axis: int) -> list:
        """Road intervals across the x (axis 0) or y (axis 1) direction."""
        pitch = self.block_size + self.road_width
        n = self.blocks_x if axis == 0 else self.blocks_y
        return [(i * pitch + self.block_size, (i + 1) * pitch) for i in range(n - 1)]


def paper_layout() -> MapConfig:
    """Reconstructed default map: 300 m square, 3x3 blocks of 90 m, 15 m roads.

    Lamppost spacing/phase and the MBS position are not published; this preset
    is a reconstruction that yields 39 candidate sites and an MBS with 12 LoS
    neighbours; the 100 m link range caps long street-canyon links.
    """
    return MapConfig(max_link_range=100.0)


@dataclass(frozen=True)
class ScenarioGraph:
    """Immutable backhaul graph. ``edges`` are sorted ``(i, j)`` pairs with
    ``i < j``; ``capacity[k]`` is the rate of ``edges[k]`` in bps."""

    positions: np.ndarray
    edges: tuple
    capacity: np.ndarray
    buildings: tuple = ()
    isolated: tuple = ()

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        edges = tuple((int(min(e)), int(max(e))) for e in self.edges)
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edges")
        if any(i == j for i, j in edges):
            raise ValueError("self loops are not allowed")
        if any(j >= len(pos) or i < 0 for i, j in edges):
            raise ValueError("edge endpoint out of range")
        cap = np.asarray(self.capacity, dtype=float).ravel()
        if cap.size != len(edges):
            raise ValueError("one capacity per edge required")
        if np.any(cap <= 0):
            raise ValueError("edge capacities must be positive")
        order = sorted(range(len(edges)), key=edges.__getitem__)
        object.__setattr__(self, "edges", tuple(edges[k] for k in order))
        cap = cap[order]
        cap.setflags(write=False)
        object.__setattr__(self, "capacity", cap)
        object.__setattr__(self, "buildings", tuple(tuple(map(float, r)) for r in self.buildings))

    @property
    def n_nodes(self) -> int:
        return len(self.positions)

    @property
    def sites(self) -> range:
        return range(1, self.n_nodes)

    @cached_property
    def edge_index(self) -> dict:
        return {e: k for k, e in enumerate(self.edges)}

    @cached_property
    def neighbors(self) -> tuple:
        adj = [[] for _ in range(self.n_nodes)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return tuple(tuple(sorted(a)) for a in adj)

    def degree(self, node: int) -> int:
        return len(self.neighbors[node])

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edge_index

    def edge_id(self, i: int, j: int) -> int:
        return self.edge_index[(min(i, j), max(i, j))]

    def capacity_of(self, i: int, j: int) -> float:
        return float(self.capacity[self.edge_id(i, j)])

    def distance(self, i: int, j: int) -> float:
        return float(np.hypot(*(self.positions[i] - self.positions[j])))

    def induced(self, nodes: Iterable[int]) -> "ScenarioGraph":
        """Subgraph on ``nodes`` plus the MBS, keeping node ids unchanged."""
        keep = set(nodes) | {0}
        ks = [k for k, (i, j) in enumerate(self.edges) if i in keep and j in keep]
        return ScenarioGraph(
            positions=self.positions,
            edges=[self.edges[k] for k in ks],
            capacity=self.capacity[ks],
            buildings=self.buildings,
        )

    def summary(self) -> dict:
        return {
            "nodes": self.n_nodes,
            "sites": self.n_nodes - 1,
            "edges": len(self.edges),
            "mbs_degree": self.degree(0) if self.n_nodes else 0,
            "isolated": list(self.isolated),
        }


def _strictly_inside(p, rect, tol: float = GEOM_TOL) -> bool:
    x0, y0, x1, y1 = rect
    return x0 + tol < p[0] < x1 - tol and y0 + tol < p[1] < y1 - tol


def line_of_sight(a: Sequence[float], b: Sequence[float], buildings: Iterable[Rect], tol: float = GEOM_TOL) -> bool:
    """True iff the segment ``a``-``b`` misses every building interior.

    Each rectangle is shrunk by ``tol`` and the segment is clipped against it
    (Liang-Barsky); grazing an edge or corner therefore counts as visible.
    """
    ax, ay = float(a[0]), float(a[1])
    dx, dy = float(b[0]) - ax, float(b[1]) - ay
    if dx == 0.0 and dy == 0.0:
        raise ValueError("line_of_sight needs two distinct points")
    for x0, y0, x1, y1 in buildings:
        t0, t1 = 0.0, 1.0
        for p, q in (
            (-dx, ax - (x0 + tol)),
            (dx, (x1 - tol) - ax),
            (-dy, ay - (y0 + tol)),
            (dy, (y1 - tol) - ay),
        ):
            if p == 0.0:
                if q < 0.0:
                    break
                continue
            t = q / p
            if p < 0.0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
            if t0 > t1:
                break
        else:
            if t1 - t0 > 1e-12:
                return False
    return True


def build_los_graph(
    positions: Sequence[Sequence[float]],
    buildings: Sequence[Rect],
    budget: Optional[LinkBudget] = None,
    max_range: Optional[float] = None,
) -> ScenarioGraph:
    """Connect every visible pair within ``max_range`` and attach capacities.

    ``positions[0]`` is the MBS. With ``max_range=None`` the range is the
    distance at which the link capacity falls to 1 Mbps.
    """
    budget = budget or LinkBudget()
    if max_range is None:
        max_range = max_link_range(budget)
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = len(pos)
    edges, caps = [], []
    for i in range(n):
        for j in range(i + 1, n):
            d = float(np.hypot(*(pos[i] - pos[j])))
            if d <= 0 or d > max_range + GEOM_TOL:
                continue
            if line_of_sight(pos[i], pos[j], buildings):
                edges.append((i, j))
                caps.append(capacity_at(d, budget))
    deg = np.zeros(n, dtype=int)
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    isolated = tuple(int(k) for k in range(1, n) if deg[k] == 0)
    return ScenarioGraph(pos, edges, caps, buildings=tuple(buildings), isolated=isolated)


def lamppost_sites(config: MapConfig) -> list:
    """Roadside candidate positions in deterministic order (deduplicated)."""
    pts = []
    tol = 1e-6
    for axis, span, cross_span in (
        (0, config.area_height, config.area_width),
        (1, config.area_width, config.area_height),
    ):
        # axis 0: vertical roads (fixed x), lampposts run along y
        bands = config.road_bands(axis)
        crossing = config.road_bands(1 - axis)
        for lo, hi in bands:
            offsets = (lo + config.curb_offset, hi - config.curb_offset)
            if offsets[0] >= offsets[1] - tol:
                offsets = ((lo + hi) / 2.0,)
            for c in offsets:
                t = config.lamppost_phase
                while t <= span + tol:
                    if not any(a + tol < t < b - tol for a, b in crossing):
                        pts.append((c, t) if axis == 0 else (t, c))
                    t += config.lamppost_spacing
    unique = []
    for p in pts:
        if not any(abs(p[0] - q[0]) < tol and abs(p[1] - q[1]) < tol for q in unique):
            unique.append(p)
    unique.sort(key=lambda p: (round(p[1], 6), round(p[0], 6)))
    mbs = config.mbs_position
    return [p for p in unique if abs(p[0] - mbs[0]) > tol or abs(p[1] - mbs[1]) > tol]


def build_manhattan_map(config: MapConfig, budget: Optional[LinkBudget] = None) -> ScenarioGraph:
    buildings = config.buildings()
    sites = [p for p in lamppost_sites(config) if not any(_strictly_inside(p, r) for r in buildings)]
    positions = [config.mbs_position] + sites
    return build_los_graph(positions, buildings, budget, config.max_link_range)


def random_scenario(
    n_sites: int,
    rng: np.random.Generator,
    *,
    area: float = 200.0,
    edge_prob: float = 0.5,
    budget: Optional[LinkBudget] = None,
    capacity_range: Optional[tuple] = None,
) -> ScenarioGraph:
    """Random test instance: uniform site positions, random LoS blockage.

    Each pair is linked independently with probability ``edge_prob``; the MBS
    is guaranteed at least one neighbour. Capacities come from the channel
    model unless ``capacity_range`` (bps) asks for uniform random rates.
    """
    budget = budget or LinkBudget()
    pos = rng.uniform(0.0, area, size=(n_sites + 1, 2))
    n = n_sites + 1
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < edge_prob]
    if n > 1 and not any(i == 0 for i, _ in edges):
        edges.append((0, int(rng.integers(1, n))))
    if capacity_range is not None:
        caps = rng.uniform(*capacity_range, size=len(edges))
    else:
        caps = [capacity_at(max(float(np.hypot(*(pos[i] - pos[j]))), 1.0), budget) for i, j in edges]
    return ScenarioGraph(pos, edges, caps)
