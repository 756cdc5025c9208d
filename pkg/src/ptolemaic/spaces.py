"""Test-space generators: strip samples, the four-point catalog, random metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import BadSpec
from .metric import FiniteMetricSpace, validate_metric

E2_DEFAULT_A = 1.9


@dataclass(frozen=True)
class Family:
    """Metric family placed on the strip coordinates.

    ``kind`` is one of ``euclidean``, ``lp``, ``snowflake``, ``conformal``.
    The conformal family multiplies Euclidean arc length by
    ``1 + height * exp(-|x - c|^2 / radius^2)`` with the bump centred at
    ``c = (0, a/2)``; it has no closed form and is sampled on a k-ring graph.
    """

    kind: str = "euclidean"
    p: float = 2.0
    eps: float = 1.0
    height: float = 0.5
    radius: float = 0.3
    k: int = 3

    @classmethod
    def parse(cls, text: str) -> "Family":
        """Parse ``euclidean``, ``lp:4``, ``snowflake:0.5`` or ``conformal[:height[:radius[:k]]]``."""
        parts = text.strip().lower().split(":")
        kind, args = parts[0], parts[1:]
        try:
            if kind == "euclidean" and not args:
                return cls("euclidean")
            if kind == "lp" and len(args) == 1:
                return cls("lp", p=float(args[0]))
            if kind == "snowflake" and len(args) == 1:
                return cls("snowflake", eps=float(args[0]))
            if kind == "conformal" and len(args) <= 3:
                vals = [float(a) for a in args]
                kw = dict(zip(("height", "radius"), vals[:2]))
                if len(vals) == 3:
                    kw["k"] = int(vals[2])
                return cls("conformal", **kw)
        except ValueError:
            pass
        raise BadSpec(f"bad family {text!r}; expected euclidean, lp:P, snowflake:EPS or conformal[:H[:R[:K]]]")

    def __str__(self):
        if self.kind == "lp":
            return f"lp:{self.p:g}"
        if self.kind == "snowflake":
            return f"snowflake:{self.eps:g}"
        if self.kind == "conformal":
            return f"conformal:{self.height:g}:{self.radius:g}:{self.k}"
        return "euclidean"

    @property
    def closed_form(self) -> bool:
        return self.kind != "conformal"

    def validate(self):
        if self.kind not in ("euclidean", "lp", "snowflake", "conformal"):
            raise BadSpec(f"unknown family {self.kind!r}")
        if self.kind == "lp" and not self.p >= 1:
            raise BadSpec(f"lp family needs p >= 1, got {self.p}")
        if self.kind == "snowflake" and not 0 < self.eps <= 1:
            raise BadSpec(f"snowflake family needs 0 < eps <= 1, got {self.eps}")
        if self.kind == "conformal" and not (self.height > -1 and self.radius > 0 and self.k >= 1):
            raise BadSpec("conformal family needs height > -1, radius > 0, k >= 1")

    def distance(self, P, Q):
        """Closed-form distance between coordinate arrays of shape (..., 2)."""
        dt = np.abs(np.asarray(P, dtype=float)[..., 0] - np.asarray(Q, dtype=float)[..., 0])
        ds = np.abs(np.asarray(P, dtype=float)[..., 1] - np.asarray(Q, dtype=float)[..., 1])
        if self.kind == "euclidean":
            return np.sqrt(dt * dt + ds * ds)
        if self.kind == "lp":
            return (dt ** self.p + ds ** self.p) ** (1.0 / self.p)
        if self.kind == "snowflake":
            base = np.sqrt(dt * dt + ds * ds)
            return base if self.eps == 1.0 else base ** self.eps
        raise BadSpec("the conformal family has no closed-form distance")

    def conformal_factor(self, P, a):
        P = np.asarray(P, dtype=float)
        if self.kind != "conformal":
            return np.ones(P.shape[:-1])
        r2 = P[..., 0] ** 2 + (P[..., 1] - 0.5 * a) ** 2
        return 1.0 + self.height * np.exp(-r2 / self.radius ** 2)


@dataclass(frozen=True)
class StripSpec:
    """Grid sample of the strip ``[-T, T] x [0, a]`` with ``nt x ns`` points."""

    a: float
    T: float
    nt: int
    ns: int
    family: Family = field(default_factory=Family)

    def __post_init__(self):
        if not (self.a > 0 and self.T > 0):
            raise BadSpec(f"strip needs a > 0 and T > 0, got a={self.a}, T={self.T}")
        if not (int(self.nt) == self.nt >= 2 and int(self.ns) == self.ns >= 2):
            raise BadSpec(f"strip needs integer nt, ns >= 2, got nt={self.nt}, ns={self.ns}")
        self.family.validate()

    @property
    def dt(self) -> float:
        return 2.0 * self.T / (self.nt - 1)

    @property
    def ds(self) -> float:
        return self.a / (self.ns - 1)

    @property
    def pitch(self) -> float:
        return max(self.dt, self.ds)

    def t_values(self):
        return np.array([-self.T + i * self.dt for i in range(self.nt)])

    def s_values(self):
        return np.array([j * self.ds for j in range(self.ns)])

    def coords(self) -> np.ndarray:
        """Grid points, t-major: point ``i * ns + j`` is ``(t_i, s_j)``."""
        t, s = self.t_values(), self.s_values()
        return np.column_stack([np.repeat(t, self.ns), np.tile(s, self.nt)])

    def to_dict(self):
        return {"a": self.a, "T": self.T, "nt": self.nt, "ns": self.ns, "family": str(self.family)}


@dataclass(frozen=True, eq=False)
class StripChart:
    """Strip sample: grid coordinates plus the metric space they carry."""

    spec: StripSpec
    coords: np.ndarray
    space: FiniteMetricSpace
    graph: object = None

    @property
    def n(self):
        return len(self.coords)

    def index(self, i, j) -> int:
        return int(i) * self.spec.ns + int(j)

    def t_index(self, t, tol=1e-9) -> int:
        """Grid column at parameter ``t``; raises ``KeyError`` when ``t`` is off-grid."""
        i = (t + self.spec.T) / self.spec.dt
        r = round(i)
        if abs(i - r) > tol * max(1.0, abs(i)) or not 0 <= r < self.spec.nt:
            raise KeyError(t)
        return int(r)

    def s_index(self, s, tol=1e-9) -> int:
        j = s / self.spec.ds
        r = round(j)
        if abs(j - r) > tol * max(1.0, abs(j)) or not 0 <= r < self.spec.ns:
            raise KeyError(s)
        return int(r)

    def point(self, t, s) -> int:
        return self.index(self.t_index(t), self.s_index(s))

    def nearest(self, t, s) -> int:
        d = (self.coords[:, 0] - t) ** 2 + (self.coords[:, 1] - s) ** 2
        return int(np.argmin(d))

    def line(self, j) -> np.ndarray:
        """Indices of the sampled line ``c_s`` with ``s = s_j``, ordered by t."""
        return np.arange(self.spec.nt) * self.spec.ns + int(j)

    def fibre(self, i) -> np.ndarray:
        """Indices of the fibre ``H_t`` with ``t = t_i``, ordered by s."""
        return int(i) * self.spec.ns + np.arange(self.spec.ns)

    def distance_coords(self, P, Q):
        """Distance between arbitrary strip coordinates (closed-form families only)."""
        return self.spec.family.distance(P, Q)

    def interior(self, idx) -> bool:
        i, j = divmod(int(idx), self.spec.ns)
        return 0 < i < self.spec.nt - 1 and 0 < j < self.spec.ns - 1


def strip_sample(spec: StripSpec, workers=None) -> StripChart:
    """Sample ``spec`` on its grid.

    Closed-form families use their formula directly. The conformal family is
    the shortest-path metric of a k-ring grid graph with conformally scaled
    edge lengths.
    """
    P = spec.coords()
    labels = [f"({t:.12g},{s:.12g})" for t, s in P]
    fam = spec.family
    if fam.closed_form:
        D = fam.distance(P[:, None, :], P[None, :, :])
        np.fill_diagonal(D, 0.0)
        return StripChart(spec, P, validate_metric(D, labels))
    from .graph import grid_strip_graph

    g = grid_strip_graph(spec, fam.k)
    return StripChart(spec, P, validate_metric(g.apsp(), labels, check_triangle=False), g)


def square_space() -> FiniteMetricSpace:
    r = math.sqrt(2.0)
    D = [[0, 1, r, 1], [1, 0, 1, r], [r, 1, 0, 1], [1, r, 1, 0]]
    return validate_metric(D, ["a", "b", "c", "d"])


def e1_space() -> FiniteMetricSpace:
    """Four points with ``|xy| = 2`` and every other distance 1."""
    D = [[0, 2, 1, 1], [2, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]]
    return validate_metric(D, ["x", "y", "z", "w"])


def e2_space(a: float = E2_DEFAULT_A) -> FiniteMetricSpace:
    """``|xy| = |zw| = 2``, ``|xz| = |xw| = 1``, ``|yz| = |yw| = a`` for ``1 < a < 2``.

    It satisfies cosq exactly when ``(1 + a)^2 >= 8``, i.e. ``a >= 2*sqrt(2) - 1``,
    and violates PT for every ``a < 2``.
    """
    a = float(a)
    if not 1.0 < a < 2.0:
        raise BadSpec(f"E2 needs 1 < a < 2, got {a}")
    D = [[0, 2, 1, 1], [2, 0, a, a], [1, a, 0, 2], [1, a, 2, 0]]
    return validate_metric(D, ["x", "y", "z", "w"])


def tetrahedron_space() -> FiniteMetricSpace:
    D = np.ones((4, 4)) - np.eye(4)
    return validate_metric(D, ["p", "q", "r", "s"])


def catalog(e2_a: float = E2_DEFAULT_A) -> dict:
    """Named four-point spaces: E1, E2(a), unit square, regular tetrahedron."""
    return {
        "E1": e1_space(),
        f"E2({e2_a:g})": e2_space(e2_a),
        "square": square_space(),
        "tetrahedron": tetrahedron_space(),
    }


class Generator(str, Enum):
    SHIFTED_UNIFORM = "shifted_uniform"
    GRAPH_METRIC = "graph_metric"
    PERTURBED_EUCLIDEAN = "perturbed_euclidean"


def metric_closure(D) -> np.ndarray:
    """Shortest-path closure of a complete weighted graph (Floyd-Warshall)."""
    D = np.array(D, dtype=float)
    for k in range(D.shape[-1]):
        D = np.minimum(D, D[..., :, k, None] + D[..., None, k, :])
    return D


def _shifted_uniform(n, rng):
    D = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    D[iu] = rng.uniform(1.0, 2.0, size=len(iu[0]))
    return D + D.T


def _graph_metric(n, rng, extra_p=0.3):
    from .graph import GraphSpace

    order = rng.permutation(n)
    edges = {}
    for pos in range(1, n):
        u, v = int(order[pos]), int(order[rng.integers(pos)])
        edges[(min(u, v), max(u, v))] = rng.uniform(1.0, 2.0)
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < extra_p:
                edges[(u, v)] = rng.uniform(1.0, 2.0)
    g = GraphSpace(n, [(u, v, w) for (u, v), w in sorted(edges.items())])
    return g.apsp()


def _perturbed_euclidean(n, rng, dim=2, delta=0.1):
    X = rng.uniform(0.0, 1.0, size=(n, dim))
    D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    F = rng.uniform(1.0 - delta, 1.0 + delta, size=(n, n))
    F = np.triu(F, 1)
    D = D * (F + F.T)
    return metric_closure(D)


def random_metric(n: int, seed: int, generator=Generator.SHIFTED_UNIFORM) -> FiniteMetricSpace:
    """Seeded random metric space on ``n`` points."""
    if n < 4:
        raise BadSpec(f"random_metric needs n >= 4, got {n}")
    gen = Generator(generator)
    rng = np.random.default_rng(seed)
    if gen is Generator.SHIFTED_UNIFORM:
        D = _shifted_uniform(n, rng)
    elif gen is Generator.GRAPH_METRIC:
        D = _graph_metric(n, rng)
    else:
        D = _perturbed_euclidean(n, rng)
    return validate_metric(D)
