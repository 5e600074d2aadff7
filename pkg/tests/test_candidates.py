import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from harnackcheck import timefn as tf
from harnackcheck.candidates import (
    CandidateError, build_catalog, catalog_ids, make_heat_family, make_log_family, make_yamabe_family,
    power_li_yau, sharp_compact, tabulated_candidate, yamabe_case,
)
from harnackcheck.equations import CurvatureParams as P, PowerSum

KEYS = ("gamma", "alpha", "phi", "beta", "c")


def at(cand, t):
    return {k: float(v[0]) for k, v in cand.evaluate(np.array([t])).items()}


def test_heat_examples():
    v = at(make_heat_family("LiYauDavies", P(4, 0), alpha=2), 1.0)
    assert (v["phi"], v["c"], v["gamma"], v["beta"]) == (8.0, 4.0, 1.0, 1.0)
    v = at(make_heat_family("Hamilton", P(4, 0), delta=0.5), 2.0)
    assert v["gamma"] == 0.5
    assert v["phi"] == pytest.approx(2.0, rel=1e-14) and v["c"] == pytest.approx(2.0, rel=1e-14)
    v = at(make_heat_family("LinearLiXu", P(3, 1)), 1e-10)
    assert v["alpha"] == pytest.approx(1.0, abs=1e-9) and v["beta"] == pytest.approx(0.0, abs=1e-9)


def test_heat_li_yau_davies_closed_form():
    m, K, al = 4.0, 0.5, 2.0
    v = at(make_heat_family("LiYauDavies", P(m, K), alpha=al), 3.0)
    assert v["phi"] == pytest.approx(m * al**2 / 6 + m * al**2 * K / (4 * (al - 1)), rel=1e-14)
    assert v["c"] == pytest.approx(m * al / 6 + m * al * K / (2 * (al - 1)), rel=1e-14)


def test_li_xu_alpha_limits():
    c = make_heat_family("LiXu", P(4, 1))
    a0 = c.alpha(np.array([1e-9, 1e-6]))[0]
    ainf = c.alpha(np.array([50.0, 400.0]))[0]
    assert np.allclose(a0, 1.0, atol=1e-5)
    assert np.allclose(ainf, 2.0, atol=1e-6)


def test_lixu_alpha_series_branch_is_continuous():
    f = tf.lixu_alpha(1.0)
    lo, hi = f(np.array([0.5 - 1e-12, 0.5 + 1e-12]))
    assert abs(lo[0] - lo[1]) < 1e-10 and abs(hi[0] - hi[1]) < 1e-9
    t = tf.lixu_unit_crossing(1.5)
    assert f.value(np.array([t]))[0] == pytest.approx(1.5, abs=1e-12)


def test_log_examples():
    v = at(sharp_compact(2.0, 1.0), math.log(2))
    assert v["phi"] == pytest.approx(2.0, rel=1e-14) and v["c"] == pytest.approx(2.0, rel=1e-14)
    v = at(make_log_family("HamiltonNeg", P(4, 0), -8.0, delta=0.5), 1.0)
    assert v["phi"] == pytest.approx(8.0, rel=1e-14)


def test_sharp_pos_complete_reduces_to_sharp_compact():
    t = np.linspace(0.05, 5, 40)
    near = make_log_family("SharpPosComplete", P(1, 0), 1.0, alpha=1 + 1e-10)
    ref = sharp_compact(1.0, 1.0)
    for k in KEYS:
        assert np.allclose(getattr(near, k)(t)[0], getattr(ref, k)(t)[0], rtol=1e-8)


def test_power_family_example():
    v = at(power_li_yau(P(3, 0), PowerSum(((1.0, 0.5),)), 1.5), 2.0)
    assert v["gamma"] == 1.0 and v["beta"] == 2.0
    assert v["phi"] == pytest.approx(1.6875, rel=1e-14) and v["c"] == pytest.approx(1.125, rel=1e-14)


def test_k_scaling():
    t = tf.logspace(1e-2, 5, 20)
    two = make_yamabe_family("li_yau", P(4, 1), 0.0, -1.0, 0.5, 1.0, alpha=1.5, k=2.0)
    four = make_yamabe_family("li_yau", P(4, 1), 0.0, -1.0, 0.5, 1.0, alpha=1.5, k=4.0)
    assert np.allclose(four.alpha(t)[0], 2 * two.alpha(t)[0])
    assert np.allclose(four.phi(t)[0], 4 * two.phi(t)[0])
    assert np.allclose(four.c(t)[0], 2 * two.c(t)[0])
    assert np.allclose(four.beta(t)[0], two.beta(t)[0])
    alias = build_catalog("yamabe.case1_2.k_scaled")[0]
    assert np.allclose(alias.alpha(t)[0], two.alpha(t)[0])


def test_scaled_closure():
    c = make_heat_family("LiYauDavies", P(4, 0.5), alpha=2)
    s = c.scaled(2.0)
    t = tf.logspace(1e-2, 5, 20)
    assert np.allclose(s.alpha(t)[0], 2 * c.alpha(t)[0])
    assert np.allclose(s.phi(t)[0], 4 * c.phi(t)[0])
    assert np.allclose(s.c(t)[0], 2 * c.c(t)[0])
    assert np.allclose(s.beta(t)[0], c.beta(t)[0])
    assert np.allclose(s.gamma(t)[0], c.gamma(t)[0])
    with pytest.raises(CandidateError):
        c.scaled(0.5)


def test_k_scaling_needs_k_at_least_inverse_p():
    with pytest.raises(CandidateError):
        make_yamabe_family("li_yau", P(4, 1), 0.0, -1.0, 0.5, 1.0, k=1.5)


def test_bounded_li_yau_reduces_to_heat_when_flat():
    # vanishing bound M and K = 0: the Case 1.1 Li-Yau entry is the heat one
    t = tf.logspace(1e-2, 5, 20)
    y = make_yamabe_family("li_yau", P(4, 0), 0.0, 1.0, 2.0, 1e-15, alpha=2.0)
    h = make_heat_family("LiYauDavies", P(4, 0), alpha=2.0)
    for k in KEYS:
        assert np.allclose(getattr(y, k)(t)[0], getattr(h, k)(t)[0], rtol=1e-12)


def test_yamabe_case_labels_and_mismatch():
    assert [yamabe_case(b, p) for b, p in ((1, 2), (-1, .5), (-1, -1), (1, -1), (1, .5), (-1, 2))] == [
        "1.1", "1.2", "1.3", "2.1", "2.2", "2.3"]
    with pytest.raises(CandidateError):
        make_yamabe_family("li_yau", P(4, 1), 0.0, 1.0, 2.0, 1.0, case="1.2")
    with pytest.raises(CandidateError):
        make_yamabe_family("li_yau", P(4, 1), 0.0, 1.0, 1.0, 1.0)


def test_construction_errors():
    with pytest.raises(CandidateError):
        make_heat_family("LiYauDavies", P(4, 0), alpha=0.5)
    with pytest.raises(CandidateError):
        make_heat_family("Hamilton", P(4, 0), delta=1.5)
    with pytest.raises(CandidateError):
        make_heat_family("LiXu", P(4, 0))
    with pytest.raises(CandidateError):
        make_heat_family("Nope", P(4, 0))
    with pytest.raises(CandidateError):
        make_log_family("LiYauCase1b", P(4, 0.1), 1.0, alpha=2.0)
    with pytest.raises(CandidateError):
        sharp_compact(1.0, 0.0)
    with pytest.raises(CandidateError):
        build_catalog("no.such.entry")


def test_tabulated_matches_closed_form():
    t = np.logspace(-1, 1, 400)
    rows = np.column_stack([t, np.ones_like(t), 2 * np.ones_like(t), 8 / t, t, 4 / t])
    tab = tabulated_candidate("tab", rows)
    ref = make_heat_family("LiYauDavies", P(4, 0), alpha=2)
    s = np.logspace(-1, 1, 997)[1:-1]
    for k in KEYS:
        a, b = getattr(tab, k)(s)[0], getattr(ref, k)(s)[0]
        assert np.max(np.abs(a - b) / np.maximum(1, np.abs(b))) < 1e-3


def test_tabulated_constant_and_too_short():
    t = np.linspace(1, 2, 5)
    rows = np.column_stack([t] + [np.full_like(t, v) for v in (1, 2, 3, 4, 5)])
    tab = tabulated_candidate("c", rows)
    v, d = tab.phi(np.linspace(1.1, 1.9, 7))
    assert np.allclose(v, 3.0) and np.allclose(d, 0.0)
    with pytest.raises(CandidateError):
        tabulated_candidate("short", rows[:3])


def _interior_times(cand):
    lo, hi = cand.t_domain
    hi = min(hi, 10.0)
    t = tf.logspace(max(lo, 1e-3), hi, 102)[1:-1]
    if "t_max" in cand.param_meta:  # stay clear of the junction of the piecewise ε-profile
        junction = math.log(3) / -cand.param_meta["a"]
        t = t[np.abs(t - junction) > 1e-3]
    return t


@pytest.mark.parametrize("cid", catalog_ids())
def test_derivatives_match_central_differences(cid):
    cand = build_catalog(cid)[0]
    t = _interior_times(cand)
    d = 1e-5 * t
    loose = cand.name == "log.sharp_neg_family"  # ODE dense output limits the difference quotient
    for k in KEYS:
        fn = getattr(cand, k)
        if fn is None:
            continue
        v, dv = fn(t)
        fd = (fn(t + d)[0] - fn(t - d)[0]) / (2 * d)
        scale = 1 + np.abs(dv) + np.abs(v) / t
        err = np.max(np.abs(fd - dv) / scale)
        assert err < (1e-4 if loose else 1e-6), (cid, k, err)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.0, 4.0), st.floats(1e-2, 5.0))
def test_scaling_preserves_positivity(k, t):
    c = make_heat_family("LiYauDavies", P(3, 0.2), alpha=1.5).scaled(k)
    v = at(c, t)
    assert v["alpha"] > 0 and v["phi"] > 0 and v["c"] > 0
