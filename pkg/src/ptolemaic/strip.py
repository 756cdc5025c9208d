"""Numerical harness for flat-strip rigidity on sampled strips.

A chart samples ``[-T, T] x [0, a]`` on a grid. Row ``j`` is the line
``c_s(t) = (t, s_j)``, column ``i`` is the fibre ``H_t`` at ``t = t_i``.
On such a chart this module evaluates, at finite resolution:

* truncated Busemann functions ``b(x) = d(x, c(T)) - T`` of the lines;
* the fibre chart ``F(x) = (B(x), A(x))`` around an interior basepoint, where
  ``B`` is the t-offset and ``A`` the signed distance inside the fibre to the
  basepoint's line;
* the rescaled metrics ``d_lambda`` seen through ``lambda * F``;
* the ratio ``A^2 / r^2`` along unit-speed rays leaving the basepoint;
* the distance ``mu(t)`` between two lines and the two inequalities that force
  it to be constant;
* the final check ``d^2 = dt^2 + ds^2``.

Limits are replaced by finite truncations. Busemann values are always
computed at two truncations, ``T`` and ``T/2``, and their difference is the
reported error bar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryBasepoint, LineNotSampled, RayExitsStrip, WindowOutOfRange
from .metric import ALL_CONDITIONS, TOL_CLASS, scan
from .spaces import StripChart, StripSpec, strip_sample

TOL = 1e-9


@dataclass(frozen=True)
class BusemannField:
    line: int
    direction: int
    T: float
    values: np.ndarray
    values_half: np.ndarray
    T_half: float

    def error_bar(self, mask=None) -> float:
        """Largest change between the ``T/2`` and ``T`` truncations on ``mask``."""
        diff = np.abs(self.values - self.values_half)
        return float(diff[mask].max() if mask is not None else diff.max())


def _check_line(chart: StripChart, j):
    if int(j) != j or not 0 <= j < chart.spec.ns:
        raise LineNotSampled(f"line index {j} not in 0..{chart.spec.ns - 1}")
    return int(j)


def _column_at(chart: StripChart, t) -> int:
    i = (t + chart.spec.T) / chart.spec.dt
    if i < -1e-9 or i > chart.spec.nt - 1 + 1e-9:
        raise LineNotSampled(f"truncation t={t} outside the sampled range [-{chart.spec.T}, {chart.spec.T}]")
    return int(round(i))


def _truncated(chart: StripChart, j, direction, T):
    i = _column_at(chart, direction * T)
    end = chart.index(i, j)
    T_used = abs(chart.coords[end, 0])
    return chart.space.dist[:, end] - T_used, T_used


def busemann(chart: StripChart, line, direction=1, T=None) -> BusemannField:
    """Truncated Busemann function of the line ``c_s`` (``s = s_line``).

    ``direction=+1`` uses the ray towards ``t -> +inf`` (``b+``), ``-1`` the
    opposite ray (``b-``). ``T`` defaults to the chart half-length and is
    snapped to the nearest sampled column.
    """
    j = _check_line(chart, line)
    direction = 1 if direction >= 0 else -1
    T = chart.spec.T if T is None else float(T)
    vals, T_used = _truncated(chart, j, direction, T)
    half, T_half = _truncated(chart, j, direction, T_used / 2)
    return BusemannField(j, direction, T_used, vals, half, T_half)


def window_mask(chart: StripChart, half_width) -> np.ndarray:
    return np.abs(chart.coords[:, 0]) <= half_width + 1e-12


@dataclass(frozen=True)
class BusemannDifference:
    deviation: float
    deviation_half: float
    error_bar: float
    sum_identity: float
    sum_identity_half: float


def _deviation(diff, mask):
    d = diff[mask]
    return float(np.abs(d - d.mean()).max())


def busemann_difference(chart: StripChart, line1, line2, direction=1, T=None, window=None) -> BusemannDifference:
    """How far ``b_1 - b_2`` is from constant for two parallel lines.

    Measured on points with ``|t| <= window`` (default ``T/4``) at truncations
    ``T`` and ``T/2``. ``sum_identity`` is the largest gap between
    ``b_1+ + b_1-`` and ``b_2+ + b_2-`` on the same window.
    """
    T = chart.spec.T if T is None else float(T)
    window = T / 4 if window is None else float(window)
    mask = window_mask(chart, window)
    b1, b2 = busemann(chart, line1, direction, T), busemann(chart, line2, direction, T)
    dev = _deviation(b1.values - b2.values, mask)
    dev_half = _deviation(b1.values_half - b2.values_half, mask)
    s1 = busemann(chart, line1, 1, T), busemann(chart, line1, -1, T)
    s2 = busemann(chart, line2, 1, T), busemann(chart, line2, -1, T)
    gap = (s1[0].values + s1[1].values) - (s2[0].values + s2[1].values)
    gap_half = (s1[0].values_half + s1[1].values_half) - (s2[0].values_half + s2[1].values_half)
    return BusemannDifference(
        dev, dev_half, abs(dev - dev_half), float(np.abs(gap[mask]).max()), float(np.abs(gap_half[mask]).max())
    )


def affinity_check(values, chart: StripChart, path) -> float:
    """Largest normalized second difference of ``values`` along equally spaced points.

    ``values`` is a per-point array over the chart (or a callable on
    coordinates); ``path`` lists chart indices along a straight segment.
    """
    path = np.asarray(path, dtype=int)
    if len(path) < 3:
        return 0.0
    P = chart.coords[path]
    steps = np.sqrt(((P[1:] - P[:-1]) ** 2).sum(-1))
    h = steps.mean()
    if np.abs(steps - h).max() > 1e-9 * h:
        raise ValueError("affinity_check needs equally spaced sample points")
    f = values(P) if callable(values) else np.asarray(values, dtype=float)[path]
    return float(np.abs(f[2:] - 2 * f[1:-1] + f[:-2]).max() / (h * h))


@dataclass(frozen=True)
class FibreCoords:
    """Fibre chart ``F = (B, A)`` around the basepoint ``base``."""

    base: int
    B: np.ndarray
    A: np.ndarray

    @property
    def F(self):
        return np.column_stack([self.B, self.A])


def fibre_map(chart: StripChart, x0) -> FibreCoords:
    x0 = int(x0)
    if not chart.interior(x0):
        raise BoundaryBasepoint(f"basepoint {x0} at {tuple(chart.coords[x0])} lies on the chart boundary")
    ns = chart.spec.ns
    i0, j0 = divmod(x0, ns)
    idx = np.arange(chart.n)
    foot = (idx // ns) * ns + j0
    t = chart.coords[:, 0]
    s_index = idx % ns
    B = t - t[x0]
    A = np.sign(s_index - j0) * chart.space.dist[idx, foot]
    return FibreCoords(x0, B, A)


def _pair_ratios(num, den):
    iu = np.triu_indices(len(den), 1)
    return num[iu] / den[iu]


@dataclass(frozen=True)
class FibreReport:
    lip_B: float
    lip_A: float
    bilip_low: float
    bilip_high: float
    property_a: float


def fibre_report(chart: StripChart, fc: FibreCoords) -> FibreReport:
    """Observed Lipschitz constants of ``B``, ``A``, the bilipschitz range of ``F``
    and the property-(A) defect.

    Property (A) asks for every ``x`` in ``H_t`` and every sampled ``t'`` a point
    ``x'`` in ``H_t'`` with ``|x x'| = |t - t'|``; the defect is the worst gap
    to the best sampled ``x'``.
    """
    D = chart.space.dist
    FB = np.abs(fc.B[:, None] - fc.B[None, :])
    FA = np.abs(fc.A[:, None] - fc.A[None, :])
    lip_B = _pair_ratios(FB, D).max()
    lip_A = _pair_ratios(FA, D).max()
    r = _pair_ratios(np.sqrt(FB * FB + FA * FA), D)
    nt, ns = chart.spec.nt, chart.spec.ns
    t = chart.spec.t_values()
    gaps = np.abs(D.reshape(chart.n, nt, ns) - np.abs(chart.coords[:, 0][:, None] - t[None, :])[:, :, None])
    return FibreReport(float(lip_B), float(lip_A), float(r.min()), float(r.max()), float(gaps.min(axis=2).max()))


@dataclass(frozen=True)
class RescaledMetric:
    lam: float
    window: np.ndarray
    d_lam: np.ndarray
    d_eu: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.abs(self.d_lam - self.d_eu).max()) if len(self.window) else 0.0

    def ratio_range(self):
        iu = np.triu_indices(len(self.window), 1)
        r = self.d_lam[iu] / self.d_eu[iu]
        return float(r.min()), float(r.max())


def rescale(chart: StripChart, x0, lam, radius, fc: FibreCoords = None) -> RescaledMetric:
    """``d_lambda`` on the points whose rescaled chart image lies within ``radius``.

    The window is the set of sampled ``x`` with ``|lambda F(x)| <= radius``;
    there ``d_lambda(lambda F(x), lambda F(y)) = lambda d(x, y)``, compared with
    the Euclidean distance of the images.
    """
    fc = fibre_map(chart, x0) if fc is None else fc
    lam = float(lam)
    ns = chart.spec.ns
    i0, j0 = divmod(int(x0), ns)
    col = chart.fibre(i0)
    reach = min(abs(fc.A[col[0]]), abs(fc.A[col[-1]]), chart.spec.T - abs(chart.coords[x0, 0]))
    if radius > lam * reach + 1e-12:
        raise WindowOutOfRange(f"window radius {radius} exceeds lambda * {reach:.6g} available around the basepoint")
    F = fc.F
    win = np.flatnonzero(lam * np.sqrt((F ** 2).sum(-1)) <= radius + 1e-12)
    if len(win) < 2:
        raise WindowOutOfRange(f"window of radius {radius} at lambda={lam} holds fewer than 2 samples")
    d_lam = lam * chart.space.dist[np.ix_(win, win)]
    G = lam * F[win]
    d_eu = np.sqrt(((G[:, None] - G[None]) ** 2).sum(-1))
    return RescaledMetric(lam, win, d_lam, d_eu)


@dataclass(frozen=True)
class PythProbe:
    theta: float
    radii: np.ndarray
    ratios: np.ndarray
    alphas: np.ndarray
    limit: float
    expected: float

    @property
    def defect(self) -> float:
        return abs(self.limit - self.expected)


def _extrapolate(r, y):
    if len(r) == 1 or np.ptp(r) == 0:
        return float(y[-1])
    slope, intercept = np.polyfit(r, y, 1)
    return float(intercept)


def _unit_speed_offset(chart, base, u, r):
    """Coordinate offset ``rho`` with ``d(base, base + rho u) = r``."""
    fam = chart.spec.family
    if fam.kind == "euclidean":
        return r
    lo, hi = 0.0, 1.0
    while fam.distance(base, base + hi * u) < r:
        hi *= 2.0
        if hi > 1e12:
            raise RayExitsStrip("ray distance does not grow")
    # distance along a coordinate ray is increasing for every closed-form family
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fam.distance(base, base + mid * u) < r:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * hi:
            break
    return 0.5 * (lo + hi)


def pyth_probe(chart: StripChart, x0, theta, radii) -> PythProbe:
    """Ratios ``A^2(gamma(r)) / r^2`` along the unit-speed ray at angle ``theta``.

    ``gamma`` starts at the basepoint. For closed-form families it is the
    straight coordinate ray reparametrized to unit speed and evaluated at exact
    (off-grid) points; otherwise the nearest sampled point stands in for
    ``gamma(r)`` and ``r`` is its actual distance from the basepoint.
    The limit ``r -> 0`` is extrapolated linearly and compared with
    ``1 - alpha^2`` where ``alpha = B(gamma(r)) / r``.
    """
    x0 = int(x0)
    if not chart.interior(x0):
        raise BoundaryBasepoint(f"basepoint {x0} lies on the chart boundary")
    spec = chart.spec
    base = chart.coords[x0]
    u = np.array([math.cos(theta), math.sin(theta)])
    u[np.abs(u) < 1e-15] = 0.0
    radii = np.asarray(sorted(radii), dtype=float)
    ratios, alphas, used = [], [], []
    fam = spec.family
    fc = None if fam.closed_form else fibre_map(chart, x0)
    for r in radii:
        if fam.closed_form:
            rho = _unit_speed_offset(chart, base, u, r)
            p = base + rho * u
            _inside(spec, p)
            B = p[0] - base[0]
            foot = np.array([p[0], base[1]])
            A = fam.distance(p, foot)
            rr = r
        else:
            p = base + r * u
            _inside(spec, p)
            k = chart.nearest(*p)
            B, A = fc.B[k], abs(fc.A[k])
            rr = chart.space.dist[x0, k]
            if rr == 0:
                continue
        ratios.append(float(A * A / (rr * rr)))
        alphas.append(float(B / rr))
        used.append(rr)
    used, ratios, alphas = np.array(used), np.array(ratios), np.array(alphas)
    limit = _extrapolate(used, ratios)
    alpha0 = _extrapolate(used, alphas)
    return PythProbe(float(theta), used, ratios, alphas, limit, 1.0 - alpha0 * alpha0)


def _inside(spec: StripSpec, p, tol=1e-12):
    if not (-spec.T - tol <= p[0] <= spec.T + tol and -tol <= p[1] <= spec.a + tol):
        raise RayExitsStrip(f"ray point {tuple(p)} leaves the strip")


def default_radii(chart: StripChart, x0, theta, count=5):
    """Geometric radii that keep the probe ray inside the strip."""
    spec = chart.spec
    base = chart.coords[x0]
    room = [spec.T - abs(base[0])]
    c, s = math.cos(theta), math.sin(theta)
    if abs(c) > 1e-12:
        room.append((spec.T - base[0]) / c if c > 0 else (base[0] + spec.T) / -c)
    if abs(s) > 1e-12:
        room.append((spec.a - base[1]) / s if s > 0 else base[1] / -s)
    rho = 0.9 * min(room)
    # coordinate room -> metric radius
    r_max = float(spec.family.distance(base, base + rho * np.array([c, s]))) if spec.family.closed_form else rho
    return [r_max / 2 ** k for k in range(count)]


@dataclass(frozen=True)
class EquidistanceTrace:
    mu: np.ndarray
    ptolemy_defect: float
    quadratic_defect: float


def equidistance_trace(chart: StripChart, line1, line2, tol=0.0) -> EquidistanceTrace:
    """Distances ``mu(t) = d(c_1(t), c_2(t))`` and the two defects

    ``max(mu, mu')^2 - mu mu' - (t - t')^2`` and
    ``|mu - mu'| - m (t - t')^2`` with ``m = 1 / min mu``,
    each maximized over sampled ``t, t'`` and clipped at 0.
    """
    j1, j2 = _check_line(chart, line1), _check_line(chart, line2)
    if j1 == j2:
        raise LineNotSampled("equidistance needs two different lines")
    a, b = chart.line(j1), chart.line(j2)
    mu = chart.space.dist[a, b]
    t = chart.spec.t_values()
    dt2 = (t[:, None] - t[None, :]) ** 2
    mx = np.maximum(mu[:, None], mu[None, :])
    d1 = mx * mx - mu[:, None] * mu[None, :] - dt2
    m = 1.0 / mu.min()
    d2 = np.abs(mu[:, None] - mu[None, :]) - m * dt2
    return EquidistanceTrace(mu, max(0.0, float(d1.max()) - tol), max(0.0, float(d2.max()) - tol))


def flat_defect(chart: StripChart, p, q) -> float:
    d = chart.space.dist[p, q]
    e2 = float(((chart.coords[p] - chart.coords[q]) ** 2).sum())
    return abs(d * d - e2) / (d * d)


def flat_conclusion(chart: StripChart, min_dist=1e-9) -> float:
    """Worst relative gap ``|d^2 - (dt^2 + ds^2)| / d^2`` over sampled pairs."""
    D = chart.space.dist
    P = chart.coords
    E2 = ((P[:, None] - P[None]) ** 2).sum(-1)
    iu = np.triu_indices(chart.n, 1)
    d = D[iu]
    keep = d >= min_dist
    d2 = d[keep] ** 2
    return float((np.abs(d2 - E2[iu][keep]) / d2).max()) if keep.any() else 0.0


def projection_fibre_defect(spec: StripSpec, line, k=3) -> float:
    """Largest t-shift of the nearest-point projection onto line ``c_s`` in the k-ring graph."""
    from .graph import grid_strip_graph, project

    g = grid_strip_graph(spec, k)
    ns = spec.ns
    target = [i * ns + int(line) for i in range(spec.nt)]
    worst = 0.0
    for x in range(g.n):
        v, _ = project(g, target, x)
        worst = max(worst, abs(g.coords[v, 0] - g.coords[x, 0]))
    return worst


# --------------------------------------------------------------------------
# battery


@dataclass
class Check:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "pass": bool(self.passed), **self.values}


def default_basepoint(chart: StripChart) -> int:
    spec = chart.spec
    i = (spec.nt - 1) // 2
    j = (spec.ns - 1) // 2
    if not 0 < j < spec.ns - 1 or not 0 < i < spec.nt - 1:
        raise BoundaryBasepoint("chart has no interior sample point")
    return chart.index(i, j)


def strip_battery(spec: StripSpec, workers=None, tol=TOL) -> list:
    """Every strip check on one sample; returns a list of :class:`Check`."""
    chart = strip_sample(spec)
    checks = []

    for rep in scan(chart.space, ALL_CONDITIONS, workers=workers):
        checks.append(Check(
            f"scan_{rep.condition.value.lower()}",
            rep.worst_margin >= -TOL_CLASS,
            {"worst_margin": rep.worst_margin, "witness": list(rep.witness.indices),
             "count_checked": rep.count_checked, "count_violations": rep.count_violations},
        ))

    top = spec.ns - 1
    bp, bm = busemann(chart, 0, 1), busemann(chart, 0, -1)
    total = bp.values + bm.values
    on_line = np.abs(total[chart.line(0)]).max()
    lip = 0.0
    iu = np.triu_indices(chart.n, 1)
    for b in (bp, bm):
        lip = max(lip, float((np.abs(b.values[:, None] - b.values[None, :])[iu] / chart.space.dist[iu]).max()))
    checks.append(Check(
        "busemann",
        total.min() >= -1e-12 and on_line <= 1e-12 and lip <= 1 + tol,
        {"T": bp.T, "min_sum": float(total.min()), "max_sum_on_line": float(on_line), "lipschitz": lip},
    ))

    bd = busemann_difference(chart, 0, top)
    checks.append(Check(
        "busemann_parallel",
        bd.deviation <= bd.deviation_half + tol,
        {"deviation": bd.deviation, "deviation_half": bd.deviation_half, "error_bar": bd.error_bar,
         "sum_identity": bd.sum_identity, "sum_identity_half": bd.sum_identity_half},
    ))

    x0 = default_basepoint(chart)
    fc = fibre_map(chart, x0)
    fr = fibre_report(chart, fc)
    checks.append(Check(
        "fibre",
        fr.lip_B <= 1 + tol and fr.lip_A <= 2 + tol and fr.bilip_low >= 0.25 - tol
        and fr.bilip_high <= 2 + tol and fr.property_a <= tol,
        {"basepoint": x0, "lip_B": fr.lip_B, "lip_A": fr.lip_A, "bilip_low": fr.bilip_low,
         "bilip_high": fr.bilip_high, "property_a_defect": fr.property_a},
    ))

    col = chart.fibre(x0 // spec.ns)
    reach = min(abs(fc.A[col[0]]), abs(fc.A[col[-1]]), spec.T - abs(chart.coords[x0, 0]))
    lams, sups, ok = [], [], True
    for lam in (1.0, 2.0, 4.0, 8.0):
        try:
            rm = rescale(chart, x0, lam, reach, fc)
        except WindowOutOfRange:
            break  # window shrank below the mesh
        lo, hi = rm.ratio_range()
        ok = ok and lo >= 0.5 - tol and hi <= 4 + tol
        lams.append(lam)
        sups.append(rm.sup)
    ok = ok and all(b <= a + tol for a, b in zip(sups, sups[1:]))
    checks.append(Check("rescale", ok, {"lambdas": lams, "radius": float(reach), "sup": sups}))

    probes = []
    for theta in (0.0, math.pi / 3, math.pi / 2):
        pr = pyth_probe(chart, x0, theta, default_radii(chart, x0, theta))
        probes.append({"theta": theta, "limit": pr.limit, "expected": pr.expected, "defect": pr.defect})
    checks.append(Check("pyth", all(p["defect"] <= tol for p in probes), {"probes": probes}))

    eq = equidistance_trace(chart, 0, top)
    checks.append(Check(
        "equidistance",
        eq.ptolemy_defect <= tol and eq.quadratic_defect <= tol,
        {"mu_min": float(eq.mu.min()), "mu_max": float(eq.mu.max()),
         "ptolemy_defect": eq.ptolemy_defect, "quadratic_defect": eq.quadratic_defect},
    ))

    fd = flat_conclusion(chart)
    checks.append(Check("flat_conclusion", fd <= tol, {"defect": fd}))
    return checks
