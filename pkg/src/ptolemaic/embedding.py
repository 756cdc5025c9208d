"""Euclidean embeddability of finite metric spaces.

A finite metric space embeds isometrically in some Euclidean space exactly
when its Gram matrix relative to a basepoint ``x0``,

    G_ij = (d(x0, x_i)^2 + d(x0, x_j)^2 - d(x_i, x_j)^2) / 2,

is positive semidefinite. The coordinates are then read off the spectral
decomposition of ``G`` (classical multidimensional scaling with the basepoint
at the origin).

Note that this is strictly stronger than the Ptolemy condition on finite sets:
the four-point space with one distance 2 and all others 1 is Ptolemaic yet not
Euclidean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadBasepoint, NotSymmetric
from .metric import FiniteMetricSpace

TOL_EIG = 1e-9
TOL_RES = 1e-8


@dataclass(frozen=True)
class EmbeddingResult:
    embeddable: bool
    min_eigenvalue: float
    dimension: int
    coordinates: np.ndarray
    residual: float
    eigenvalues: np.ndarray
    basepoint: int = 0

    def to_dict(self):
        return {
            "embeddable": self.embeddable,
            "min_eigenvalue": self.min_eigenvalue,
            "dimension": self.dimension,
            "residual": self.residual,
            "basepoint": self.basepoint,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "coordinates": [[float(x) for x in row] for row in self.coordinates],
        }


def gram(space: FiniteMetricSpace, basepoint: int = 0) -> np.ndarray:
    """Basepoint Gram matrix over the ``n - 1`` remaining points."""
    n = space.n
    if n < 2:
        raise BadBasepoint("a Gram matrix needs at least 2 points")
    if not 0 <= int(basepoint) < n:
        raise BadBasepoint(f"basepoint {basepoint} out of range for {n} points")
    others = [i for i in range(n) if i != basepoint]
    D2 = space.dist ** 2
    r = D2[basepoint, others]
    G = 0.5 * (r[:, None] + r[None, :] - D2[np.ix_(others, others)])
    return 0.5 * (G + G.T)


def symmetric_eigen(M, sym_tol=1e-12, max_sweeps=64):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted in
    descending order and eigenvectors as orthonormal columns.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    scale = float(np.abs(A).max()) if A.size else 0.0
    if A.size and float(np.abs(A - A.T).max()) > sym_tol * max(scale, 1.0):
        raise NotSymmetric("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    if n <= 1 or scale == 0.0:
        return np.diag(A).copy(), V

    eps = np.finfo(float).eps
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= eps * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= eps * eps * scale:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap, aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq

    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def _pairwise(X):
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def embed(space: FiniteMetricSpace, basepoint: int = 0, tol_eig=TOL_EIG) -> EmbeddingResult:
    """Classical MDS embedding with a Euclidean-embeddability verdict.

    Coordinates are built from the eigenvalues above ``tol_eig * trace``; the
    basepoint sits at the origin. Non-embeddable spaces still get these
    best-effort coordinates.
    """
    n = space.n
    if n == 1:
        return EmbeddingResult(True, 0.0, 0, np.zeros((1, 0)), 0.0, np.zeros(0), 0)
    G = gram(space, basepoint)
    w, V = symmetric_eigen(G)
    trace = float(np.trace(G))
    thresh = tol_eig * max(trace, 0.0)
    keep = w > thresh
    dim = int(np.count_nonzero(keep))
    Y = V[:, keep] * np.sqrt(w[keep])
    X = np.zeros((n, dim))
    others = [i for i in range(n) if i != basepoint]
    X[others] = Y

    D = space.dist
    E = _pairwise(X)
    off = ~np.eye(n, dtype=bool)
    residual = float(np.max(np.abs(E[off] - D[off]) / D[off]))
    min_eig = float(w[-1])
    return EmbeddingResult(min_eig >= -thresh, min_eig, dim, X, residual, w, int(basepoint))
