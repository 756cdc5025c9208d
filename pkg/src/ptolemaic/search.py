"""Randomized search for four-point spaces separating the PT, QI and cosq classes.

Samples are drawn in blocks; block ``b`` of a hunt with seed ``s`` uses the
generator ``default_rng([s, b])``, so the outcome depends only on
``(budget, seed)`` and never on how blocks are spread across workers.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import permutations
from pathlib import Path

import numpy as np

from .errors import CorruptCatalog, MetricError, MetricFormatError
from .formats import fmt_float
from .metric import TOL_CLASS, FiniteMetricSpace, cosq_margins, default_workers, pt_margins, qi_margins, validate_metric
from .spaces import metric_closure

BLOCK = 4096
DEDUP_TOL = 1e-9

GENERATORS = ("shifted_uniform", "perturbed_euclidean", "graph_metric", "e1_perturbed", "e2_perturbed")

_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_PERMS = np.array(list(permutations(range(4))))
# _PERM_EDGES[p, e] = source edge index whose distance lands in edge slot e under permutation p
_PERM_EDGES = np.array([
    [_EDGES.index(tuple(sorted((perm[a], perm[b])))) for a, b in _EDGES] for perm in _PERMS
])


@dataclass(frozen=True)
class Witness:
    space: FiniteMetricSpace
    signature: tuple
    margins: tuple
    canonical: tuple
    provenance: dict

    def key(self):
        return _dedup_key(np.array(self.canonical))

    def to_dict(self):
        return {
            "labels": list(self.space.labels),
            "matrix": [[float(x) for x in row] for row in self.space.dist],
            "signature": dict(zip(("pt", "qi", "cosq"), self.signature)),
            "margins": dict(zip(("pt", "qi", "cosq"), self.margins)),
            "canonical": list(self.canonical),
            "provenance": self.provenance,
        }


def six(D) -> np.ndarray:
    """Edge vector ``(d12, d13, d14, d23, d24, d34)`` of one or many 4x4 matrices."""
    D = np.asarray(D, dtype=float)
    return np.stack([D[..., a, b] for a, b in _EDGES], axis=-1)


def _lexmin_rows(V):
    """Lexicographically smallest row of each ``(m, 24, 6)`` stack."""
    alive = np.ones(V.shape[:2], dtype=bool)
    for c in range(V.shape[2]):
        col = np.where(alive, V[:, :, c], np.inf)
        alive &= col == col.min(axis=1, keepdims=True)
    first = np.argmax(alive, axis=1)
    return V[np.arange(len(V)), first]


def canonicalize_many(d6) -> np.ndarray:
    d6 = np.atleast_2d(np.asarray(d6, dtype=float))
    return _lexmin_rows(d6[:, _PERM_EDGES])


def canonicalize(q) -> tuple:
    """Lexicographically minimal edge vector over all 24 relabellings.

    ``q`` is a 4-point :class:`FiniteMetricSpace`, a 4x4 matrix or an edge
    6-vector in ``(d12, d13, d14, d23, d24, d34)`` order.
    """
    if isinstance(q, FiniteMetricSpace):
        if q.n != 4:
            raise ValueError(f"canonicalize needs a 4-point space, got {q.n} points")
        d = six(q.dist)
    else:
        arr = np.asarray(q, dtype=float)
        d = six(arr) if arr.shape == (4, 4) else arr
    return tuple(float(x) for x in canonicalize_many(d)[0])


def _dedup_key(canon):
    c = np.asarray(canon, dtype=float)
    return tuple(np.round(c / c.max() / DEDUP_TOL).astype(np.int64).tolist())


def _sample_block(seed, block, size):
    rng = np.random.default_rng([int(seed), int(block)])
    kind = rng.integers(len(GENERATORS), size=size)
    D = np.zeros((size, 4, 4))

    def fill(mask, d6):
        for e, (a, b) in enumerate(_EDGES):
            D[mask, a, b] = D[mask, b, a] = d6[:, e]

    m = kind == 0
    fill(m, rng.uniform(1.0, 2.0, size=(m.sum(), 6)))

    m = kind == 1
    X = rng.normal(size=(m.sum(), 4, 3))
    E = np.sqrt(((X[:, :, None] - X[:, None]) ** 2).sum(-1))
    fill(m, six(E) * rng.uniform(0.9, 1.1, size=(m.sum(), 6)))

    m = kind == 2
    w = rng.uniform(1.0, 2.0, size=(m.sum(), 6))
    drop = rng.random(size=(m.sum(), 6)) < 0.3
    # keep a spanning path 0-1-2-3 so the graph stays connected
    drop[:, [0, 3, 5]] = False
    fill(m, np.where(drop, np.inf, w))

    m = kind == 3
    fill(m, np.array([2.0, 1, 1, 1, 1, 1]) * rng.uniform(0.95, 1.05, size=(m.sum(), 6)))

    m = kind == 4
    a = rng.uniform(1.8, 2.0, size=m.sum())
    one = np.ones_like(a)
    base = np.stack([2 * one, one, one, a, a, 2 * one], axis=1)
    fill(m, base * rng.uniform(0.98, 1.02, size=(m.sum(), 6)))

    D = metric_closure(D)
    return kind, six(D)


def _hunt_block(seed, block, size, target, tol_class):
    kind, d6 = _sample_block(seed, block, size)
    cols = tuple(d6[:, e] for e in range(6))
    margins = np.stack([pt_margins(cols), qi_margins(cols), cosq_margins(cols)], axis=1)
    sig = margins >= -tol_class
    bad = sig[:, 2] & ~sig[:, 1]
    if bad.any():
        raise AssertionError(f"cosq pass with QI fail at sample {int(np.flatnonzero(bad)[0])} of block {block}")
    keep = (d6 > 0).all(axis=1)
    for c, want in enumerate(target):
        if want is not None:
            keep &= sig[:, c] == want
    idx = np.flatnonzero(keep)
    return [(block, int(i), GENERATORS[kind[i]], d6[i], margins[i], sig[i]) for i in idx]


def _to_matrix(d6):
    D = np.zeros((4, 4))
    for e, (a, b) in enumerate(_EDGES):
        D[a, b] = D[b, a] = d6[e]
    return D


def hunt(budget, seed=0, target=(None, None, None), workers=None, max_witnesses=None, tol_class=TOL_CLASS):
    """Sample ``budget`` random 4-point spaces and keep those matching ``target``.

    ``target`` is a ``(pt, qi, cosq)`` triple of booleans, ``None`` acting as
    a wildcard. Witnesses are deduplicated by isometry class and returned in
    sampling order.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    target = tuple(target)
    blocks = [(b, min(BLOCK, budget - b * BLOCK)) for b in range((budget + BLOCK - 1) // BLOCK)]
    workers = default_workers() if workers is None else max(1, int(workers))
    run = lambda bs: _hunt_block(seed, bs[0], bs[1], target, tol_class)  # noqa: E731
    if workers == 1:
        found = [run(bs) for bs in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            found = list(pool.map(run, blocks))

    out, seen = [], set()
    for hits in found:
        if not hits:
            continue
        canon = canonicalize_many(np.array([h[3] for h in hits]))
        for h, c in zip(hits, canon):
            key = _dedup_key(c)
            if key in seen:
                continue
            seen.add(key)
            block, i, gen, d6, margins, sig = h
            space = validate_metric(_to_matrix(d6), ["x", "y", "z", "w"])
            out.append(Witness(
                space,
                tuple(bool(s) for s in sig),
                tuple(float(m) for m in margins),
                tuple(float(x) for x in c),
                {"generator": gen, "seed": int(seed), "block": block, "sample": i},
            ))
            if max_witnesses is not None and len(out) >= max_witnesses:
                return out
    return out


def merge(*stores) -> list:
    """Concatenate witness lists, dropping repeated isometry classes."""
    out, seen = [], set()
    for store in stores:
        for w in store:
            k = w.key()
            if k not in seen:
                seen.add(k)
                out.append(w)
    return out


def _num(x):
    return fmt_float(x)


def dumps_catalog(witnesses) -> str:
    items = []
    for w in witnesses:
        d = w.to_dict()
        rows = ", ".join("[" + ", ".join(_num(v) for v in r) + "]" for r in d["matrix"])
        items.append(
            "    {"
            f'"labels": {json.dumps(d["labels"])}, '
            f'"matrix": [{rows}], '
            f'"signature": {json.dumps(d["signature"])}, '
            '"margins": {' + ", ".join(f'"{k}": {_num(v)}' for k, v in d["margins"].items()) + "}, "
            '"canonical": [' + ", ".join(_num(v) for v in d["canonical"]) + "], "
            f'"provenance": {json.dumps(d["provenance"], sort_keys=True)}'
            "}"
        )
    body = ",\n".join(items)
    return '{\n  "schema": 1,\n  "witnesses": [\n' + body + ("\n" if items else "") + "  ]\n}\n"


def persist(witnesses, path) -> Path:
    path = Path(path)
    path.write_text(dumps_catalog(witnesses))
    return path


def loads_catalog(text) -> list:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptCatalog(f"catalog is not valid JSON (line {exc.lineno}): {exc.msg}") from None
    if not isinstance(doc, dict) or doc.get("schema") != 1 or not isinstance(doc.get("witnesses"), list):
        raise CorruptCatalog('catalog must be {"schema": 1, "witnesses": [...]}')
    out = []
    for n, item in enumerate(doc["witnesses"]):
        try:
            space = validate_metric(item["matrix"], item["labels"])
            sig = tuple(bool(item["signature"][k]) for k in ("pt", "qi", "cosq"))
            margins = tuple(float(item["margins"][k]) for k in ("pt", "qi", "cosq"))
            canonical = tuple(float(x) for x in item["canonical"])
            prov = dict(item["provenance"])
        except (KeyError, TypeError, ValueError, MetricError, MetricFormatError) as exc:
            raise CorruptCatalog(f"witness {n}: {exc}") from None
        if space.n != 4 or len(canonical) != 6:
            raise CorruptCatalog(f"witness {n}: expected a 4-point space and a 6-entry canonical vector")
        if canonicalize(space) != canonical:
            raise CorruptCatalog(f"witness {n}: canonical vector does not match the matrix")
        out.append(Witness(space, sig, margins, canonical, prov))
    return out


def load(path) -> list:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CorruptCatalog(f"cannot read {path}: {exc.strerror}") from None
    return loads_catalog(text)


def parse_signature(text) -> tuple:
    """Parse ``pt=1,qi=0,cosq=*`` into ``(True, False, None)``; missing keys are wildcards."""
    want = {"pt": None, "qi": None, "cosq": None}
    if text:
        for part in text.split(","):
            key, _, val = part.partition("=")
            key, val = key.strip().lower(), val.strip().lower()
            if key not in want or val not in ("1", "0", "*", "true", "false"):
                raise ValueError(f"bad signature term {part!r}; expected pt|qi|cosq=1|0|*")
            want[key] = None if val == "*" else val in ("1", "true")
    return (want["pt"], want["qi"], want["cosq"])
