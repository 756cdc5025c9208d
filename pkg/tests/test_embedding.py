import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptolemaic.embedding import embed, gram, symmetric_eigen
from ptolemaic.errors import BadBasepoint, NotSymmetric
from ptolemaic.metric import scan, validate_metric
from ptolemaic.spaces import e1_space, e2_space, random_metric, square_space, tetrahedron_space


def cloud_space(X):
    D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
    return validate_metric(D)


def test_e1_gram_and_determinant():
    # hand cofactor expansion of [[4,2,2],[2,1,0.5],[2,0.5,1]]:
    # 4(1 - 0.25) - 2(2 - 1) + 2(1 - 2) = 3 - 2 - 2 = -1
    G = gram(e1_space(), 0)
    assert np.array_equal(G, [[4, 2, 2], [2, 1, 0.5], [2, 0.5, 1]])
    w, _ = symmetric_eigen(G)
    assert np.prod(w) == pytest.approx(-1.0, abs=1e-9)


def test_e1_not_embeddable():
    r = embed(e1_space())
    assert not r.embeddable
    assert r.min_eigenvalue < 0


def test_square_embeds_in_plane():
    r = embed(square_space())
    assert r.embeddable and r.dimension == 2 and r.residual < 1e-9


def test_tetrahedron_embeds_in_space():
    r = embed(tetrahedron_space())
    assert r.embeddable and r.dimension == 3 and r.residual < 1e-9


def test_gram_basepoint_errors():
    with pytest.raises(BadBasepoint):
        gram(square_space(), 4)
    with pytest.raises(BadBasepoint):
        gram(validate_metric([[0]]), 0)


def test_single_point():
    r = embed(validate_metric([[0]]))
    assert r.embeddable and r.dimension == 0


def test_jacobi_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        symmetric_eigen([[1, 2], [0, 1]])
    with pytest.raises(NotSymmetric):
        symmetric_eigen(np.ones((2, 3)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 25), st.integers(0, 10 ** 6))
def test_jacobi_against_lapack(n, seed):
    A = np.random.default_rng(seed).normal(size=(n, n))
    A = A + A.T
    w, V = symmetric_eigen(A)
    ref = np.linalg.eigvalsh(A)[::-1]
    scale = max(1.0, np.abs(ref).max())
    assert np.allclose(w, ref, atol=1e-10 * scale)
    assert np.allclose(V.T @ V, np.eye(n), atol=1e-10)
    assert np.allclose(A @ V, V * w, atol=1e-9 * scale)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 30), st.integers(1, 6), st.integers(0, 10 ** 6))
def test_round_trip_point_clouds(n, dim, seed):
    X = np.random.default_rng(seed).normal(size=(n, dim))
    r = embed(cloud_space(X))
    assert r.embeddable
    assert r.residual < 1e-8
    assert r.dimension <= min(dim, n - 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 10), st.integers(0, 10 ** 6), st.sampled_from(["shifted_uniform", "perturbed_euclidean", "graph_metric"]))
def test_verdict_independent_of_basepoint(n, seed, gen):
    s = random_metric(n, seed, gen)
    verdicts = {embed(s, b).embeddable for b in range(n)}
    assert len(verdicts) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 9), st.integers(1, 4), st.integers(0, 10 ** 6))
def test_embeddable_spaces_pass_four_point_conditions(n, dim, seed):
    s = cloud_space(np.random.default_rng(seed).normal(size=(n, dim)))
    assert embed(s).embeddable
    assert all(rep.worst_margin >= -1e-9 for rep in scan(s, workers=1))


def test_pt_does_not_imply_embeddable():
    s = e1_space()
    assert scan(s, workers=1)[0].worst_margin >= -1e-12
    assert not embed(s).embeddable


def test_e2_not_embeddable():
    assert not embed(e2_space(1.9)).embeddable
