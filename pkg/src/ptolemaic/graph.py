"""Discrete geodesic spaces: weighted graphs with their shortest-path metric.

Single-source work (distances, predecessor trees, geodesic extraction) runs on
a heap-based Dijkstra written here so that predecessor ties are broken
deterministically. Full all-pairs matrices come from
``scipy.sparse.csgraph.dijkstra``.
"""

from __future__ import annotations

import heapq
import json
import threading
from dataclasses import dataclass
from math import gcd
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra as _scipy_dijkstra

from .errors import Disconnected, NotAGeodesic
from .metric import FiniteMetricSpace, validate_metric

_TIE_RTOL = 1e-12


class GraphSpace:
    """Connected undirected graph with positive edge lengths.

    ``coords`` optionally holds planar vertex coordinates (``n x 2``).
    Distance rows are cached per source on first use.
    """

    def __init__(self, n, edges, coords=None, pitch=None):
        self.n = int(n)
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        self.pitch = pitch
        self.adj = [[] for _ in range(self.n)]
        best = {}
        for u, v, w in edges:
            u, v, w = int(u), int(v), float(w)
            if u == v:
                continue
            if not w > 0:
                raise ValueError(f"edge ({u}, {v}) has non-positive length {w}")
            key = (min(u, v), max(u, v))
            if key not in best or w < best[key]:
                best[key] = w
        self.edges = sorted((u, v, w) for (u, v), w in best.items())
        for u, v, w in self.edges:
            self.adj[u].append((v, w))
            self.adj[v].append((u, w))
        for lst in self.adj:
            lst.sort()
        self._rows = {}
        self._apsp = None
        self._lock = threading.Lock()
        self._check_connected()

    def _check_connected(self):
        if self.n == 0:
            return
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v, _ in self.adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != self.n:
            missing = min(set(range(self.n)) - seen)
            raise Disconnected(f"vertex {missing} is unreachable from vertex 0")

    def edge_length(self, u, v):
        for x, w in self.adj[u]:
            if x == v:
                return w
        return None

    def shortest_paths(self, source):
        """``(dist, pred)`` from ``source``; cached."""
        source = int(source)
        row = self._rows.get(source)
        if row is None:
            row = _dijkstra(self.adj, source)
            with self._lock:
                row = self._rows.setdefault(source, row)
        return row

    def distances(self, source) -> np.ndarray:
        return self.shortest_paths(source)[0]

    def distance(self, u, v) -> float:
        if self._apsp is not None:
            return float(self._apsp[u, v])
        return float(self.distances(u)[v])

    def geodesic(self, x, y) -> list:
        """Vertex path from ``x`` to ``y`` along the smallest-id predecessor tree."""
        _, pred = self.shortest_paths(x)
        path = [int(y)]
        while path[-1] != x:
            path.append(int(pred[path[-1]]))
        return path[::-1]

    def sparse(self):
        if not self.edges:
            return coo_matrix((self.n, self.n)).tocsr()
        u, v, w = (np.array(c) for c in zip(*self.edges))
        return coo_matrix((np.r_[w, w], (np.r_[u, v], np.r_[v, u])), shape=(self.n, self.n)).tocsr()

    def apsp(self) -> np.ndarray:
        """All-pairs shortest-path matrix, exactly symmetric."""
        if self._apsp is None:
            D = _scipy_dijkstra(self.sparse(), directed=False)
            D = np.minimum(D, D.T)
            np.fill_diagonal(D, 0.0)
            D.setflags(write=False)
            self._apsp = D
        return self._apsp

    def metric_space(self, labels=None) -> FiniteMetricSpace:
        return validate_metric(self.apsp(), labels)

    def to_dict(self):
        verts = []
        for i in range(self.n):
            v = {"id": i}
            if self.coords is not None:
                v["x"], v["y"] = float(self.coords[i, 0]), float(self.coords[i, 1])
            verts.append(v)
        return {"vertices": verts, "edges": [{"u": u, "v": v, "len": w} for u, v, w in self.edges]}

    @classmethod
    def from_dict(cls, doc):
        verts = sorted(doc["vertices"], key=lambda v: v["id"])
        ids = [int(v["id"]) for v in verts]
        if ids != list(range(len(ids))):
            raise ValueError("vertex ids must be 0..n-1")
        coords = None
        if verts and all("x" in v and "y" in v for v in verts):
            coords = [[float(v["x"]), float(v["y"])] for v in verts]
        edges = [(e["u"], e["v"], e["len"]) for e in doc["edges"]]
        return cls(len(ids), edges, coords)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def _dijkstra(adj, source):
    n = len(adj)
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.intp)
    dist[source] = 0.0
    done = np.zeros(n, dtype=bool)
    heap = [(0.0, source)]
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w in adj[u]:
            if done[v]:
                continue
            nd = du + w
            dv = dist[v]
            if nd < dv * (1.0 - _TIE_RTOL):
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
            elif nd <= dv * (1.0 + _TIE_RTOL) and u < pred[v]:
                pred[v] = u
    if not done.all():
        raise Disconnected(f"vertex {int(np.flatnonzero(~done)[0])} unreachable from {source}")
    return dist, pred


def shortest_paths(g: GraphSpace, source):
    """Exact single-source distances and predecessor array (ties: smallest vertex id)."""
    return g.shortest_paths(source)


def ring_offsets(k):
    """Primitive grid steps ``(di, dj)`` with ``max(|di|, |dj|) <= k``.

    Non-primitive steps are collinear with a chain of primitive ones and add
    nothing to the metric.
    """
    return [(di, dj) for di in range(-k, k + 1) for dj in range(-k, k + 1)
            if (di, dj) != (0, 0) and gcd(abs(di), abs(dj)) == 1]


def grid_strip_graph(spec, k: int = 3) -> GraphSpace:
    """k-ring graph on the strip grid of ``spec``.

    Edge length is the Euclidean length of the edge times the family's
    conformal factor at the edge midpoint (factor 1 for every other family).
    """
    from .errors import BadSpec

    if int(k) != k or k < 1:
        raise BadSpec(f"ring radius must be an integer >= 1, got {k}")
    P = spec.coords()
    nt, ns = spec.nt, spec.ns
    ii, jj = np.divmod(np.arange(nt * ns), ns)
    us, vs = [], []
    for di, dj in ring_offsets(int(k)):
        if (di, dj) < (0, 0):
            continue
        ok = (ii + di >= 0) & (ii + di < nt) & (jj + dj >= 0) & (jj + dj < ns)
        u = np.flatnonzero(ok)
        us.append(u)
        vs.append(u + di * ns + dj)
    u, v = np.concatenate(us), np.concatenate(vs)
    seg = P[v] - P[u]
    length = np.sqrt((seg ** 2).sum(-1)) * spec.family.conformal_factor(0.5 * (P[u] + P[v]), spec.a)
    return GraphSpace(len(P), zip(u.tolist(), v.tolist(), length.tolist()), P, pitch=spec.pitch)


@dataclass(frozen=True)
class MidpointSet:
    x: int
    y: int
    members: tuple
    tol: float

    def diameter(self, g: GraphSpace) -> float:
        """Largest graph distance between two members (0 for fewer than two)."""
        m = list(self.members)
        if len(m) < 2:
            return 0.0
        return float(max(g.distances(a)[m].max() for a in m))

    def coord_diameter(self, g: GraphSpace) -> float:
        m = list(self.members)
        if len(m) < 2 or g.coords is None:
            return 0.0
        Q = g.coords[m]
        return float(np.sqrt(((Q[:, None] - Q[None]) ** 2).sum(-1)).max())


def midpoints(g: GraphSpace, x, y, tol=None) -> MidpointSet:
    """Vertices ``z`` with ``||xz| - |zy|| <= tol`` and ``|xz| + |zy| <= |xy| + tol``.

    ``tol`` defaults to the grid pitch when the graph carries one.
    """
    if x == y:
        raise ValueError("midpoints needs two distinct vertices")
    if tol is None:
        tol = g.pitch if g.pitch is not None else 1e-9
    dx, dy = g.distances(x), g.distances(y)
    dxy = dx[y]
    ok = (np.abs(dx - dy) <= tol) & (dx + dy <= dxy + tol)
    return MidpointSet(int(x), int(y), tuple(int(i) for i in np.flatnonzero(ok)), float(tol))


def path_length(g: GraphSpace, path) -> float:
    total = 0.0
    for a, b in zip(path, path[1:]):
        w = g.edge_length(a, b)
        if w is None:
            raise NotAGeodesic(f"vertices {a} and {b} are not adjacent")
        total += w
    return total


def convexity_profile(g: GraphSpace, p, geodesic, tol=1e-9) -> np.ndarray:
    """Convexity defects of ``d(p, .)`` along a shortest path.

    With arc-length positions ``r_{i-1} < r_i < r_{i+1}`` the defect is
    ``f(v_i)`` minus the linear interpolation of its neighbours' values; for
    equal steps this is ``f(v_i) - (f(v_{i-1}) + f(v_{i+1})) / 2``.
    Distance convexity means every defect is ``<= tol``.
    """
    path = [int(v) for v in geodesic]
    if len(path) < 2:
        return np.zeros(0)
    length = path_length(g, path)
    direct = g.distance(path[0], path[-1])
    if abs(length - direct) > tol * max(1.0, direct):
        raise NotAGeodesic(f"path length {length!r} differs from endpoint distance {direct!r}")
    steps = np.array([g.edge_length(a, b) for a, b in zip(path, path[1:])])
    f = g.distances(p)[path]
    left, right = steps[:-1], steps[1:]
    interp = (right * f[:-2] + left * f[2:]) / (left + right)
    return f[1:-1] - interp


def project(g: GraphSpace, subset, x):
    """Nearest vertex of ``subset`` to ``x`` (smallest id on ties) and its distance."""
    subset = sorted(int(v) for v in subset)
    if not subset:
        raise ValueError("projection onto an empty subset")
    d = g.distances(x)[subset]
    k = int(np.argmin(d))
    return subset[k], float(d[k])


def lipschitz_ratio(g: GraphSpace, subset, pairs) -> float:
    """Largest ``d(pi x, pi y) / d(x, y)`` over ``pairs`` for the nearest-point projection.

    A measurement only; no bound is implied.
    """
    best = 0.0
    proj = {}
    for x, y in pairs:
        if x == y:
            continue
        for v in (x, y):
            if v not in proj:
                proj[v] = project(g, subset, v)[0]
        best = max(best, g.distance(proj[x], proj[y]) / g.distance(x, y))
    return best
