import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starmetric import (LUKASIEWICZ, MAXIMUM, STAR_P, STAR_S, DomainError, UnsupportedError,
                        UsageError, check_star_metric_axioms, d_L, d_max, d_p, d_s,
                        euclidean_product_L, induced_metric, product_max, product_T,
                        replay_metric_witness, signed_line_space)
from starmetric.metric import NAMED_METRICS

coord = st.floats(min_value=0.0, max_value=100.0, allow_nan=False, allow_subnormal=False)


def test_worked_example_values():
    assert d_p(1, 25) == 16.0
    assert d_p(1, 16) == 9.0
    assert d_p(16, 25) == 1.0


@pytest.mark.parametrize("name, fn", sorted(NAMED_METRICS.items()))
def test_closed_forms_match_induced_kernel(name, fn, rng):
    space = induced_metric({"lukasiewicz": LUKASIEWICZ, "max": MAXIMUM, "s": STAR_S,
                            "p": STAR_P}[name])
    a, b = rng.uniform(0, 20, size=(2, 500))
    got = space.kernel(a[:, None], b[:, None])
    np.testing.assert_allclose(got, fn(a, b), rtol=1e-12, atol=1e-12)


def test_d_max_is_zero_only_on_diagonal():
    assert d_max(3, 3) == 0.0
    assert d_max(3, 5) == 5.0
    assert d_max(0, 2) == 2.0


def test_d_s_closed_form():
    assert d_s(3, 5) == 4.0
    assert d_L(7, 2) == 5.0


@settings(max_examples=200)
@given(st.sampled_from(["lukasiewicz", "max", "s", "p"]), coord, coord, coord)
def test_induced_triangle_property(name, x, y, z):
    star = {"lukasiewicz": LUKASIEWICZ, "max": MAXIMUM, "s": STAR_S, "p": STAR_P}[name]
    space = induced_metric(star)
    dxy, dxz, dzy = space.dist(x, y), space.dist(x, z), space.dist(z, y)
    assert dxy >= 0
    assert dxy == space.dist(y, x)
    assert (dxy == 0) == (x == y)
    assert dxy <= star(dxz, dzy) + 1e-9 * max(1.0, dxy)


@settings(max_examples=100)
@given(st.lists(st.tuples(coord, coord), min_size=3, max_size=3))
def test_product_max_dominated_by_product_T(pts):
    factors = [induced_metric(STAR_S)] * 2
    pm, pt = product_max(factors), product_T(factors)
    x, y, _ = (np.array(p) for p in pts)
    assert pm.dist(x, y) <= pt.dist(x, y) + 1e-12


def test_worked_example_passes_under_p():
    space = induced_metric(STAR_P)
    report = check_star_metric_axioms(space, [1, 16, 25])
    assert report.passed, report.summary()
    assert report.counters["triangle_mode"] == "exhaustive"
    assert report.counters["triangle_checks"] == 27


def test_worked_example_fails_under_lukasiewicz_with_replayable_witness():
    space = induced_metric(STAR_P).with_star(LUKASIEWICZ)
    report = check_star_metric_axioms(space, [1, 16, 25])
    tri = report["M3* triangle (lukasiewicz)"]
    assert not tri.passed
    assert tri.margin == pytest.approx(6.0, abs=1e-9)
    w = tri.witness
    assert {w["x"][0], w["y"][0]} == {1.0, 25.0} and w["z"][0] == 16.0
    assert replay_metric_witness(space, tri)
    # the witness survives a JSON round trip
    loaded = json.loads(json.dumps(report.to_dict()))
    check = next(c for c in loaded["checks"] if c["law"].startswith("M3"))
    assert check["witness"]["bound"] == 10.0


def test_sampled_triangles_record_seed(rng):
    space = induced_metric(STAR_S)
    pts = rng.uniform(0, 10, size=50)
    report = check_star_metric_axioms(space, pts, triple_budget=1000, seed=42)
    assert report.passed
    assert report.seed == 42
    assert report.counters["triangle_mode"] == "sampled"
    assert report.counters["triangle_checks"] == 1000


def test_domain_violation_names_point():
    with pytest.raises(DomainError, match="-1"):
        check_star_metric_axioms(induced_metric(STAR_P), [1.0, -1.0])


def test_empty_point_set_rejected():
    with pytest.raises(UsageError):
        check_star_metric_axioms(induced_metric(STAR_P), np.empty((0, 1)))


def test_signed_line_spaces():
    line = signed_line_space(LUKASIEWICZ)
    assert line.dist(-3, 4) == 7.0
    ds = signed_line_space(STAR_S)
    assert ds.pseudometric
    assert ds.dist(-3, 3) == 0.0
    with pytest.raises(UnsupportedError):
        signed_line_space(STAR_P)


def test_d_s_on_reals_is_only_a_pseudometric():
    ds = signed_line_space(STAR_S)
    pts = [-3.0, 0.0, 3.0, 5.0]
    assert check_star_metric_axioms(ds, pts).passed
    strict = check_star_metric_axioms(ds, pts, pseudometric_mode=False)
    m1 = strict["M1 identity of indiscernibles"]
    assert not m1.passed
    assert replay_metric_witness(ds, m1)


def test_tolerance_ambiguous_flag():
    space = induced_metric(LUKASIEWICZ)
    report = check_star_metric_axioms(space, [1.0, 1.0 + 1e-12, 3.0])
    m1 = report["M1 identity of indiscernibles"]
    assert not m1.passed
    assert "tolerance-ambiguous" in m1.flags


def test_products_of_induced_spaces(rng):
    for star in (LUKASIEWICZ, MAXIMUM, STAR_S, STAR_P):
        factors = [induced_metric(star)] * 3
        pts = rng.uniform(0, 10, size=(30, 3))
        for space in (product_max(factors), product_T(factors)):
            assert space.arity == 3
            report = check_star_metric_axioms(space, pts)
            assert report.passed, report.summary()


def test_product_T_is_left_fold():
    factors = [induced_metric(STAR_P)] * 3
    space = product_T(factors)
    x, y = np.array([1.0, 4.0, 0.0]), np.array([25.0, 9.0, 1.0])
    expected = STAR_P(STAR_P(16.0, 1.0), 1.0)
    assert space.dist(x, y) == expected


def test_euclidean_product_requires_lukasiewicz():
    line = signed_line_space(LUKASIEWICZ)
    e = euclidean_product_L([line, line])
    assert e.dist([0, 0], [3, 4]) == 5.0
    with pytest.raises(UnsupportedError):
        euclidean_product_L([induced_metric(STAR_S)] * 2)


def test_mixed_factor_stars_rejected():
    with pytest.raises(UsageError):
        product_max([induced_metric(STAR_S), induced_metric(STAR_P)])
    with pytest.raises(UsageError):
        product_T([])


def test_pairwise_matches_dist(rng):
    space = product_max([induced_metric(STAR_P)] * 2)
    pts = rng.uniform(0, 5, size=(20, 2))
    D = space.pairwise(pts)
    assert D.shape == (20, 20)
    assert D[3, 7] == space.dist(pts[3], pts[7])
    assert np.all(np.diag(D) == 0)


def test_dist_rejects_bad_domain():
    with pytest.raises(DomainError):
        induced_metric(STAR_S).check_domain([[math.inf]])
