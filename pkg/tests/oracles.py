"""Reference implementations used only by the tests.

Each one is written from the problem statement with a different algorithm
than the package code (exhaustive search, separating axes, permutations).
"""

import itertools
import math

import numpy as np


# -- geometry --------------------------------------------------------------

def segment_hits_open_box(a, b, box, eps=1e-9):
    """Separating-axis test between a closed segment and an open rectangle.

    Interiors overlap iff no axis (x, y, segment normal) separates them; touching
    projections count as separated.
    """
    x0, y0, x1, y1 = box
    ax, ay = a
    bx, by = b
    if max(ax, bx) <= x0 + eps or min(ax, bx) >= x1 - eps:
        return False
    if max(ay, by) <= y0 + eps or min(ay, by) >= y1 - eps:
        return False
    nx, ny = -(by - ay), bx - ax
    norm = math.hypot(nx, ny)
    nx, ny = nx / norm, ny / norm
    s = nx * ax + ny * ay
    corners = [nx * x + ny * y - s for x in (x0, x1) for y in (y0, y1)]
    if min(corners) >= -eps or max(corners) <= eps:
        return False
    return True


def visible(a, b, boxes):
    return not any(segment_hits_open_box(a, b, r) for r in boxes)


def grid_sites(width, height, block, road, spacing, phase, offset):
    """Lampposts along both curbs of every road, skipping crossing roads."""
    pitch = block + road
    nx = round((width + road) / pitch)
    ny = round((height + road) / pitch)
    vroads = [(i * pitch + block, (i + 1) * pitch) for i in range(nx - 1)]
    hroads = [(j * pitch + block, (j + 1) * pitch) for j in range(ny - 1)]
    pts = set()

    def in_road(t, roads):
        return any(lo < t < hi for lo, hi in roads)

    for lo, hi in vroads:
        for x in (lo + offset, hi - offset):
            k = 0
            while phase + k * spacing <= height + 1e-9:
                y = phase + k * spacing
                if not in_road(y, hroads):
                    pts.add((round(x, 6), round(y, 6)))
                k += 1
    for lo, hi in hroads:
        for y in (lo + offset, hi - offset):
            k = 0
            while phase + k * spacing <= width + 1e-9:
                x = phase + k * spacing
                if not in_road(x, vroads):
                    pts.add((round(x, 6), round(y, 6)))
                k += 1
    boxes = [(i * pitch, j * pitch, i * pitch + block, j * pitch + block) for i in range(nx) for j in range(ny)]
    return sorted(pts), boxes


# -- paths -----------------------------------------------------------------

def adjacency(n, edges):
    adj = {i: set() for i in range(n)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    return adj


def all_simple_routes(n, edges, max_hops):
    """Every simple path site -> ... -> 0 with at most ``max_hops`` edges, by
    trying every ordered tuple of distinct intermediate sites."""
    adj = adjacency(n, edges)
    sites = range(1, n)
    out = []
    for length in range(1, max_hops + 1):
        for seq in itertools.permutations(sites, length):
            path = seq + (0,)
            if all(path[k + 1] in adj[path[k]] for k in range(length)):
                out.append(path)
    return sorted(out)


def min_route_weight(n, edges, weights, max_hops):
    """min over routes of summed edge weight, per node (inf if unreachable)."""
    w = {}
    for (i, j), v in zip(edges, weights):
        w[(i, j)] = w[(j, i)] = v
    best = [math.inf] * n
    best[0] = 0.0
    for path in all_simple_routes(n, edges, max_hops):
        cost = sum(w[(path[k], path[k + 1])] for k in range(len(path) - 1))
        best[path[0]] = min(best[path[0]], cost)
    return best


# -- LP --------------------------------------------------------------------

def lp_vertex_max(c, A, b):
    """max c.x s.t. A x <= b, x >= 0 by enumerating basic solutions."""
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    m, n = A.shape
    G = np.vstack([A, -np.eye(n)])
    h = np.concatenate([b, np.zeros(n)])
    best = -math.inf
    for rows in itertools.combinations(range(m + n), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ x <= h + 1e-9):
            best = max(best, float(np.dot(c, x)))
    return best


def assignment_bruteforce(cost):
    cost = np.asarray(cost, float)
    n = cost.shape[0]
    return min(sum(cost[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


# -- link budget -----------------------------------------------------------

def reference_capacity(d, f=73e9, bw=200e6, se=4.8, p_w=10.0, g=50.0, nf=7.0, a=69.8, beta=2.0):
    p_dbm = 10 * math.log10(p_w) + 30
    noise = -174 + 10 * math.log10(bw) + nf
    snr = p_dbm + g - (a + 10 * beta * math.log10(d)) - noise
    return bw * min(math.log2(1 + 10 ** ((snr - 3) / 10)), se), snr


# -- flows -----------------------------------------------------------------

def fixed_flow_lp(n, edges, caps, demand, deployed, max_hops):
    """Flow LP for a fixed deployment via scipy's HiGHS over every route."""
    from scipy.optimize import linprog

    dep = set(deployed)
    sub = [(e, c) for e, c in zip(edges, caps) if all(v == 0 or v in dep for v in e)]
    routes = [p for p in all_simple_routes(n, [e for e, _ in sub], max_hops) if set(p[:-1]) <= dep]
    if not routes:
        return 0.0
    rows, rhs = [], []
    for (i, j), c in sub:
        rows.append([1.0 if any({p[k], p[k + 1]} == {i, j} for k in range(len(p) - 1)) else 0.0 for p in routes])
        rhs.append(c)
    for s in dep:
        rows.append([1.0 if p[0] == s else 0.0 for p in routes])
        rhs.append(demand[s])
    res = linprog(-np.ones(len(routes)), A_ub=np.array(rows), b_ub=np.array(rhs), bounds=(0, None), method="highs")
    return -res.fun


def hop_bounded_distances(n, edges, weights, max_hops):
    """Min-plus matrix powers: lightest MBS-to-node walk with <= max_hops edges."""
    W = np.full((n, n), np.inf)
    for (i, j), w in zip(edges, weights):
        W[i, j] = W[j, i] = w
    dist = W[0].copy()
    dist[0] = 0.0
    for _ in range(max_hops - 1):
        dist = np.minimum(dist, (dist[:, None] + W).min(axis=0))
    return dist
