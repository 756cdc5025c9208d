import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptolemaic.errors import BadSpec
from ptolemaic.formats import dumps_metric_json
from ptolemaic.metric import scan
from ptolemaic.spaces import (
    Family,
    StripSpec,
    catalog,
    e2_space,
    random_metric,
    strip_sample,
)


def test_grid_coordinates():
    spec = StripSpec(1.0, 5.0, 21, 5)
    P = spec.coords()
    assert P.shape == (105, 2)
    assert tuple(P[0]) == (-5.0, 0.0)
    assert tuple(P[7]) == (-5.0 + 0.5, 0.5)  # i=1, j=2
    assert spec.dt == 0.5 and spec.ds == 0.25


def test_euclidean_example(euclid_chart):
    ch = euclid_chart
    assert ch.space.dist[ch.point(-5, 0), ch.point(5, 1)] == math.sqrt(101)


def test_euclidean_neighbour_distance_exact(euclid_chart):
    ch = euclid_chart
    assert ch.space.dist[ch.index(0, 0), ch.index(1, 1)] == math.sqrt(0.5 ** 2 + 0.25 ** 2)


def test_lp4_example(lp4_chart):
    assert lp4_chart.space.dist[lp4_chart.point(0, 0), lp4_chart.point(1, 1)] == pytest.approx(2 ** 0.25, abs=1e-15)


def test_snowflake_example():
    ch = strip_sample(StripSpec(1.0, 5.0, 21, 5, Family.parse("snowflake:0.5")))
    assert ch.space.dist[ch.point(0, 0), ch.point(4, 0)] == 2.0


def test_snowflake_one_is_euclidean(euclid_chart):
    ch = strip_sample(StripSpec(1.0, 5.0, 21, 5, Family("snowflake", eps=1.0)))
    assert np.array_equal(ch.space.dist, euclid_chart.space.dist)


@pytest.mark.parametrize("kwargs", [
    dict(a=0, T=1, nt=3, ns=3), dict(a=1, T=-1, nt=3, ns=3), dict(a=1, T=1, nt=1, ns=3), dict(a=1, T=1, nt=3, ns=1.5),
])
def test_bad_spec(kwargs):
    with pytest.raises(BadSpec):
        StripSpec(**kwargs)


@pytest.mark.parametrize("fam", [Family("lp", p=0.5), Family("snowflake", eps=0), Family("snowflake", eps=1.5), Family("bogus")])
def test_bad_family(fam):
    with pytest.raises(BadSpec):
        StripSpec(1, 1, 3, 3, fam)


@pytest.mark.parametrize("text", ["euclidean", "lp:4", "snowflake:0.5", "conformal:0.5:0.3:3"])
def test_family_parse_round_trip(text):
    assert str(Family.parse(text)) == text


def test_family_parse_rejects():
    with pytest.raises(BadSpec):
        Family.parse("lp")
    with pytest.raises(BadSpec):
        Family.parse("lp:x")


def test_conformal_factor_one_reproduces_graph_metric():
    from ptolemaic.graph import grid_strip_graph

    spec = StripSpec(1.0, 1.0, 9, 5, Family("conformal", height=0.0))
    ch = strip_sample(spec)
    ref = grid_strip_graph(StripSpec(1.0, 1.0, 9, 5), k=3).apsp()
    assert np.array_equal(ch.space.dist, ref)


def test_conformal_dominates_euclidean():
    ch = strip_sample(StripSpec(1.0, 1.0, 9, 5, Family("conformal")))
    P = ch.coords
    E = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1))
    assert (ch.space.dist >= E - 1e-12).all()


def test_catalog_contents():
    cat = catalog()
    assert list(cat) == ["E1", "E2(1.9)", "square", "tetrahedron"]
    e1 = cat["E1"].dist
    assert e1[0, 1] == 2 and sorted(e1[np.triu_indices(4, 1)]) == [1, 1, 1, 1, 1, 2]
    e2 = cat["E2(1.9)"].dist
    assert sorted(e2[np.triu_indices(4, 1)]) == [1, 1, 1.9, 1.9, 2, 2]
    assert scan(cat["square"], workers=1)[0].worst_margin == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("a", [1.0, 2.0, 0.5, 2.5])
def test_e2_rejects_out_of_range(a):
    with pytest.raises(BadSpec):
        e2_space(a)


def test_e2_cosq_window():
    lo = 2 * math.sqrt(2) - 1
    cosq = lambda a: scan(e2_space(a), workers=1)[2].worst_margin  # noqa: E731
    assert cosq(lo + 1e-6) >= 0
    assert cosq(lo - 1e-6) < 0


def test_shifted_uniform_range():
    s = random_metric(4, 0, "shifted_uniform")
    off = s.dist[np.triu_indices(4, 1)]
    assert ((off >= 1) & (off <= 2)).all()


def test_some_seed_violates_qi():
    for seed in range(200):
        if scan(random_metric(4, seed), workers=1)[1].worst_margin < 0:
            return
    pytest.fail("no QI violation in 200 shifted-uniform seeds")


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 12), st.integers(0, 10 ** 6), st.sampled_from(["shifted_uniform", "graph_metric", "perturbed_euclidean"]))
def test_random_metric_deterministic(n, seed, gen):
    a, b = random_metric(n, seed, gen), random_metric(n, seed, gen)
    assert dumps_metric_json(a) == dumps_metric_json(b)


def test_random_metric_needs_four_points():
    with pytest.raises(BadSpec):
        random_metric(3, 0)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 3), st.floats(0.5, 4), st.integers(2, 9), st.integers(2, 5))
def test_euclidean_strips_pass_all_conditions(a, T, nt, ns):
    ch = strip_sample(StripSpec(a, T, nt, ns))
    if ch.n >= 4:
        assert all(r.worst_margin >= -1e-12 for r in scan(ch.space, workers=1))
