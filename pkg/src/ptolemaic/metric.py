"""Finite metric spaces and the three four-point curvature conditions.

For four points with distances ``d_ij, d_ik, d_il, d_jk, d_jl, d_kl`` the six
edges split into three *pairings* of opposite edges::

    P1 = {ij, kl}    P2 = {ik, jl}    P3 = {il, jk}

Every inequality below is stated for one labelling ``x, y, z, w`` of the points.
Relabelling only permutes the pairings, so quantifying over all 24
relabellings reduces to:

* Ptolemy (PT): the product of one pairing is at most the sum of the other
  two products -- 3 checks, one per pairing on the left.
* Quadrilateral inequality (QI): the squares of one pairing sum to at most the
  squares of the other two pairings -- 3 checks.
* cosq: squares of pairing ``r`` are bounded by squares of pairing ``u`` plus
  twice the product of pairing ``v`` -- 6 checks, one per ordering ``(r, u, v)``.

The reduction is brute-force verified against all 24 permutations in the
test-suite.

Margins are normalized slacks: PT by the largest pairing product, QI and cosq
by the squared largest distance. A negative margin is a violation.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from math import comb

import numpy as np

from .errors import (
    AsymmetricMatrix,
    MetricFormatError,
    NegativeDistance,
    NonzeroDiagonal,
    TooFewPoints,
    TriangleViolation,
    ZeroOffDiagonal,
)

TOL_TRI = 1e-9
TOL_CLASS = 1e-12

# (r, u, v) orderings of the three pairings used by the cosq check.
_COSQ_ORDERS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))


class Condition(str, Enum):
    PT = "PT"
    QI = "QI"
    COSQ = "COSQ"

    @classmethod
    def parse(cls, name: str) -> "Condition":
        try:
            return cls(name.strip().upper())
        except ValueError:
            raise ValueError(f"unknown condition {name!r}; expected pt, qi or cosq") from None


ALL_CONDITIONS = (Condition.PT, Condition.QI, Condition.COSQ)


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Validated symmetric distance matrix with point labels.

    Build through :func:`validate_metric`; the matrix is stored read-only.
    """

    labels: tuple
    dist: np.ndarray

    def __len__(self):
        return len(self.labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    def quadruple(self, i, j, k, l) -> "Quadruple":
        idx = tuple(sorted((int(i), int(j), int(k), int(l))))
        if len(set(idx)) != 4:
            raise ValueError(f"quadruple needs 4 distinct indices, got {idx}")
        a, b, c, e = idx
        D = self.dist
        d = (D[a, b], D[a, c], D[a, e], D[b, c], D[b, e], D[c, e])
        return Quadruple(idx, tuple(float(x) for x in d))

    def subspace(self, indices) -> "FiniteMetricSpace":
        idx = list(indices)
        return validate_metric(self.dist[np.ix_(idx, idx)], [self.labels[i] for i in idx])

    def __eq__(self, other):
        if not isinstance(other, FiniteMetricSpace):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.dist, other.dist)

    def __hash__(self):
        return hash((self.labels, self.dist.tobytes()))


@dataclass(frozen=True)
class Quadruple:
    """Four point indices (increasing) and their six distances.

    ``d`` is ordered ``(d_ij, d_ik, d_il, d_jk, d_jl, d_kl)``.
    """

    indices: tuple
    d: tuple

    def to_dict(self):
        return {"indices": list(self.indices), "d": list(self.d)}


@dataclass(frozen=True)
class QuadrupleReport:
    quadruple: Quadruple
    margin_pt: float
    margin_qi: float
    margin_cosq: float


@dataclass(frozen=True)
class ConditionReport:
    condition: Condition
    worst_margin: float
    witness: Quadruple
    count_checked: int
    count_violations: int

    def to_dict(self):
        return {
            "condition": self.condition.value,
            "worst_margin": self.worst_margin,
            "witness": self.witness.to_dict(),
            "count_checked": self.count_checked,
            "count_violations": self.count_violations,
        }


@dataclass(frozen=True)
class Membership:
    in_PT: bool
    in_QI: bool
    in_cosq: bool
    reports: dict = field(default_factory=dict)

    @property
    def signature(self):
        return (self.in_PT, self.in_QI, self.in_cosq)

    def witnesses(self):
        """Worst quadruple for every condition that fails."""
        flags = {Condition.PT: self.in_PT, Condition.QI: self.in_QI, Condition.COSQ: self.in_cosq}
        return {c: self.reports[c].witness for c, ok in flags.items() if not ok and c in self.reports}


def validate_metric(matrix, labels=None, tol_tri=TOL_TRI, check_triangle=True) -> FiniteMetricSpace:
    """Check the metric axioms and return an immutable :class:`FiniteMetricSpace`.

    The triangle inequality is tested with slack ``tol_tri`` times the largest
    entry. Each failure raises a dedicated :class:`~ptolemaic.errors.MetricError`
    subclass naming the offending indices. ``check_triangle=False`` skips the
    O(n^3) triangle test for matrices that are metric by construction
    (shortest-path closures).
    """
    try:
        D = np.array(matrix, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MetricFormatError(f"matrix is not numeric: {exc}") from None
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] < 1:
        raise MetricFormatError(f"expected a non-empty square matrix, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        i, j = np.argwhere(~np.isfinite(D))[0]
        raise MetricFormatError(f"non-finite entry at ({i}, {j})")
    n = D.shape[0]
    if labels is None:
        labels = [str(i) for i in range(n)]
    labels = tuple(labels)
    if len(labels) != n:
        raise MetricFormatError(f"{len(labels)} labels for {n} points")

    diag = np.flatnonzero(np.diag(D) != 0)
    if diag.size:
        i = diag[0]
        raise NonzeroDiagonal(f"dist[{i}][{i}] = {D[i, i]!r} is not zero", (i,))
    asym = np.argwhere(D != D.T)
    if asym.size:
        i, j = sorted(asym[0])
        raise AsymmetricMatrix(f"dist[{i}][{j}] = {D[i, j]!r} but dist[{j}][{i}] = {D[j, i]!r}", (i, j))
    neg = np.argwhere(D < 0)
    if neg.size:
        i, j = neg[0]
        raise NegativeDistance(f"dist[{i}][{j}] = {D[i, j]!r} is negative", (i, j))
    off = D + np.eye(n)
    zero = np.argwhere(off == 0)
    if zero.size:
        i, j = zero[0]
        raise ZeroOffDiagonal(f"points {i} and {j} are at distance 0", (i, j))

    slack = tol_tri * float(D.max()) if n > 1 else 0.0
    for j in range(n if check_triangle else 0):
        # excess[i, k] = D[i, k] - D[i, j] - D[j, k]
        excess = D - D[:, j][:, None] - D[j, :][None, :]
        if excess.max() > slack:
            i, k = np.unravel_index(int(np.argmax(excess)), excess.shape)
            raise TriangleViolation(
                f"dist[{i}][{k}] = {D[i, k]!r} exceeds dist[{i}][{j}] + dist[{j}][{k}] = "
                f"{D[i, j] + D[j, k]!r}",
                (i, j, k),
            )
    D.setflags(write=False)
    return FiniteMetricSpace(labels, D)


def _pairings(d):
    dij, dik, dil, djk, djl, dkl = (np.asarray(x, dtype=float) for x in d)
    return (dij, dkl), (dik, djl), (dil, djk)


def pairing_products(q) -> tuple:
    """The three opposite-edge products ``(d_ij d_kl, d_ik d_jl, d_il d_jk)``."""
    d = q.d if isinstance(q, Quadruple) else q
    return tuple(float(a * b) for a, b in _pairings(d))


def pt_margins(d):
    """Vectorized PT margin over arrays of the six distances."""
    (a1, b1), (a2, b2), (a3, b3) = _pairings(d)
    p1, p2, p3 = a1 * b1, a2 * b2, a3 * b3
    worst = np.minimum(np.minimum(p2 + p3 - p1, p1 + p3 - p2), p1 + p2 - p3)
    norm = np.maximum(np.maximum(p1, p2), p3)
    return _normalize(worst, norm)


def qi_margins(d):
    """Vectorized quadrilateral-inequality margin."""
    pairs = _pairings(d)
    s = [a * a + b * b for a, b in pairs]
    worst = np.minimum(np.minimum(s[1] + s[2] - s[0], s[0] + s[2] - s[1]), s[0] + s[1] - s[2])
    return _normalize(worst, _max_sq(d))


def cosq_margins(d):
    """Vectorized cosq margin: minimum over the six (r, u, v) orderings."""
    pairs = _pairings(d)
    s = [a * a + b * b for a, b in pairs]
    p2 = [2.0 * a * b for a, b in pairs]
    worst = None
    for r, u, v in _COSQ_ORDERS:
        term = s[u] + p2[v] - s[r]
        worst = term if worst is None else np.minimum(worst, term)
    return _normalize(worst, _max_sq(d))


def _max_sq(d):
    m = np.asarray(d[0], dtype=float)
    for x in d[1:]:
        m = np.maximum(m, np.asarray(x, dtype=float))
    return m * m


def _normalize(worst, norm):
    worst = np.asarray(worst, dtype=float)
    norm = np.asarray(norm, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(norm > 0, worst / np.where(norm > 0, norm, 1.0), 0.0)
    return out if out.ndim else float(out)


_MARGIN_FUNCS = {Condition.PT: pt_margins, Condition.QI: qi_margins, Condition.COSQ: cosq_margins}


def check_pt(q) -> float:
    d = q.d if isinstance(q, Quadruple) else q
    return float(pt_margins(d))


def check_qi(q) -> float:
    d = q.d if isinstance(q, Quadruple) else q
    return float(qi_margins(d))


def check_cosq(q) -> float:
    d = q.d if isinstance(q, Quadruple) else q
    return float(cosq_margins(d))


def quadruple_report(q: Quadruple) -> QuadrupleReport:
    return QuadrupleReport(q, check_pt(q), check_qi(q), check_cosq(q))


def _triples(n):
    """All increasing index triples of ``range(n)`` in lexicographic order."""
    if n < 3:
        return np.empty((0, 3), dtype=np.intp)
    flat = np.fromiter(
        (x for t in combinations(range(n), 3) for x in t), dtype=np.intp, count=3 * comb(n, 3)
    )
    return flat.reshape(-1, 3)


class _Worst:
    """Running worst margin with lexicographic tie-break on the quadruple."""

    __slots__ = ("margin", "quad", "checked", "violations")

    def __init__(self):
        self.margin = np.inf
        self.quad = None
        self.checked = 0
        self.violations = 0

    def offer(self, margin, quad):
        if margin < self.margin or (margin == self.margin and quad < self.quad):
            self.margin, self.quad = margin, quad

    def merge(self, other):
        if other.quad is not None:
            self.offer(other.margin, other.quad)
        self.checked += other.checked
        self.violations += other.violations


def _scan_first_index(D, triples, starts, i, conditions):
    """Scan every quadruple whose smallest index is ``i``."""
    jkl = triples[starts[i + 1]:]
    j, k, l = jkl[:, 0], jkl[:, 1], jkl[:, 2]
    row = D[i]
    d = (row[j], row[k], row[l], D[j, k], D[j, l], D[k, l])
    out = {}
    for c in conditions:
        m = _MARGIN_FUNCS[c](d)
        w = _Worst()
        # argmin returns the first hit, which is the lexicographically smallest quadruple
        pos = int(np.argmin(m))
        w.offer(float(m[pos]), (i, int(j[pos]), int(k[pos]), int(l[pos])))
        w.checked = int(m.size)
        w.violations = int(np.count_nonzero(m < 0))
        out[c] = w
    return out


def default_workers() -> int:
    return os.cpu_count() or 1


def scan(space: FiniteMetricSpace, conditions=ALL_CONDITIONS, workers=None) -> list:
    """Exhaustively check every 4-point subset of ``space``.

    Work is split by smallest quadruple index across ``workers`` threads.
    The result does not depend on the worker count: margins are computed
    elementwise and partial results merge by ``(margin, quadruple)`` order.
    """
    n = space.n
    if n < 4:
        raise TooFewPoints(f"scan needs at least 4 points, got {n}")
    conditions = [Condition.parse(c) if isinstance(c, str) else Condition(c) for c in conditions]
    conditions = [c for c in ALL_CONDITIONS if c in set(conditions)]
    D = space.dist
    triples = _triples(n)
    # starts[m] = first triple whose smallest element is >= m
    starts = np.searchsorted(triples[:, 0], np.arange(n + 1), side="left")
    firsts = range(n - 3)
    workers = default_workers() if workers is None else max(1, int(workers))

    if workers == 1:
        parts = [_scan_first_index(D, triples, starts, i, conditions) for i in firsts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda i: _scan_first_index(D, triples, starts, i, conditions), firsts))

    reports = []
    for c in conditions:
        total = _Worst()
        for part in parts:
            total.merge(part[c])
        reports.append(
            ConditionReport(c, float(total.margin), space.quadruple(*total.quad), total.checked, total.violations)
        )
    return reports


def classify(space: FiniteMetricSpace, tol_class=TOL_CLASS, workers=None) -> Membership:
    """Membership of ``space`` in the PT, QI and cosq classes."""
    reports = {r.condition: r for r in scan(space, ALL_CONDITIONS, workers=workers)}
    ok = {c: reports[c].worst_margin >= -tol_class for c in reports}
    return Membership(ok[Condition.PT], ok[Condition.QI], ok[Condition.COSQ], reports)
