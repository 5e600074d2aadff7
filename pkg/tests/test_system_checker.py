import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from harnackcheck import timefn as tf
from harnackcheck.candidates import CandidateFunctions, build_catalog, make_heat_family, sharp_compact
from harnackcheck.equations import CurvatureParams as P, Linear, Logarithmic, PowerSum
from harnackcheck.system_checker import (
    CheckError, check_A2_boundary, check_condition_branch, check_system, margin_A1_first,
    margin_A1_first_rearranged, margin_A1_second, margin_A1_third, margin_A3_third,
)

HEAT = Linear(0.0)
LIYAU = make_heat_family("LiYauDavies", P(4, 0), alpha=2)


def test_margin_examples_heat():
    prm = P(4, 0)
    for f in (-3.0, 0.0, 5.0):
        assert margin_A1_first(LIYAU, HEAT, prm, 1.0, f) == pytest.approx(2.0, abs=1e-14)
        assert margin_A1_third(LIYAU, HEAT, prm, 1.0, f) == pytest.approx(4.0, abs=1e-14)
        assert margin_A3_third(LIYAU, HEAT, prm, 1.0, f) == pytest.approx(1.0, abs=1e-14)
    for t in (0.01, 0.7, 9.0):
        assert margin_A1_second(LIYAU, HEAT, prm, t, 0.0) == pytest.approx(0.0, abs=1e-10 / t**2)


@pytest.mark.parametrize("a", [0.5, 1.0, 3.0])
def test_sharp_compact_equality_case(a):
    c, eq, prm = sharp_compact(1.0, a), Logarithmic(a), P(1, 0)
    for t in (0.01, 0.3, math.log(2), 4.0):
        for f in (-5.0, 0.0, 2.0):
            assert abs(margin_A1_first(c, eq, prm, t, f)) < 1e-12 * (1 + 1 / t)
            assert abs(margin_A1_second(c, eq, prm, t, f)) < 1e-11 * (1 + 1 / t) ** 2
    # at 1 - e^{-at} = 1/2: (4/m)c - a = 4a - a
    assert margin_A1_third(c, eq, prm, math.log(2) / a, 0.3) == pytest.approx(3 * a, rel=1e-14)


def _const_cand(gamma, alpha, phi, beta, c, dalpha=0.0):
    return CandidateFunctions("const", tf.const(gamma), tf.const(alpha) + dalpha * tf.identity(), tf.const(phi),
                              tf.const(beta), tf.const(c))


def test_trivial_margins():
    prm = P(3, 0)
    zero_phi = _const_cand(1.0, 1.0, 0.0, 1.0, 0.0)
    assert margin_A1_second(zero_phi, HEAT, prm, 1.0, 0.0) == 0.0
    assert margin_A1_third(zero_phi, HEAT, prm, 1.0, 0.0) == 0.0
    assert margin_A3_third(zero_phi, HEAT, prm, 1.0, 0.0) == 0.0
    # γ = α, c = 0, no reaction: both sides of the first inequality vanish
    assert margin_A1_first(_const_cand(2.0, 2.0, 1.0, 1.0, 0.0), HEAT, prm, 1.0, 0.0) == 0.0


def test_linear_margins_do_not_depend_on_f():
    c, _, prm, _ = build_catalog("heat.li_xu")
    f = np.linspace(-10, 10, 21)
    t = np.full_like(f, 0.37)
    for fn in (margin_A1_first, margin_A1_second, margin_A3_third):
        vals = np.asarray(fn(c, HEAT, prm, t, f))
        assert np.ptp(vals) == 0.0


nums = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.2, 5), st.floats(0.2, 5), nums, nums, nums, st.floats(0.01, 5), st.floats(0.5, 8),
       st.floats(0, 3), st.floats(-3, 3), st.floats(-2, 2))
def test_first_margin_rearrangement(gamma, alpha, phi, c, dalpha, t, m, K, a, f):
    # α(t) = alpha with slope dalpha at the sample time
    cand = CandidateFunctions("r", tf.const(gamma) + 0.1 * tf.identity(),
                              tf.const(alpha) + dalpha * (tf.identity() - t), tf.const(phi), tf.const(1.0), tf.const(c))
    eq = PowerSum(((a, 0.5), (1.0, 2.0)))
    prm = P(m, K)
    lhs = margin_A1_first(cand, eq, prm, t, f)
    rhs = margin_A1_first_rearranged(cand, eq, prm, t, f)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_branch_I_eps():
    t = tf.logspace(1e-3, 10, 50)
    ok = check_condition_branch(LIYAU, "I", t, eps=1.0)
    assert all(c.status == "pass" for c in ok)
    bad = check_condition_branch(LIYAU, "I", t, eps=2.0)
    assert [c.id for c in bad if c.status == "fail"] == ["I.min_gap"]


def test_branch_II_III_li_xu():
    c, _, _, _ = build_catalog("heat.li_xu")
    t = tf.logspace(1e-3, 10, 200)
    for br in ("II", "III"):
        assert all(x.status == "pass" for x in check_condition_branch(c, br, t)), br
    with pytest.raises(CheckError):
        check_condition_branch(c, "IV", t)


def test_branch_unbounded_ratio_is_inconclusive():
    # β/(α-γ) grows linearly: the grid supremum is still rising at the right end
    c = CandidateFunctions("grow", tf.const(1.0), tf.const(2.0), tf.inv_t(), tf.identity(), tf.inv_t())
    res = check_condition_branch(c, "III", tf.logspace(1e-3, 10, 100))
    assert [x.status for x in res if x.id == "III.beta_over_gap_bounded"] == ["inconclusive"]


def test_A2_boundary():
    assert all(c.status == "pass" for c in check_A2_boundary(sharp_compact(1.0, 1.0)))
    assert all(c.status == "pass" for c in check_A2_boundary(build_catalog("heat.li_xu")[0]))
    flat = _const_cand(1.0, 1.0, 3.0, 1.0, 1.0)
    res = {c.id: c.status for c in check_A2_boundary(flat)}
    assert res["phi_divergence"] == "fail"


def test_check_system_examples():
    t = tf.logspace(1e-3, 10, 100)
    f = np.linspace(-10, 10, 21)
    rep = check_system(LIYAU, HEAT, P(4, 0), "A3", "I", t, f)
    assert rep.passed
    c, eq, prm, _ = build_catalog("log.sharp_compact", {"a": -1.0})
    for br in ("I", "II", "III"):
        assert check_system(c, eq, prm, "A3", br, t, f).verdict == "fail"
    assert check_system(c, eq, prm, "A2", None, t, f).passed
    with pytest.raises(CheckError):
        check_system(LIYAU, HEAT, P(4, 0), "A3", "I", [], f)
    with pytest.raises(CheckError):
        check_system(LIYAU, HEAT, P(4, 0), "A3", None, t, f)


def test_report_serialises_deterministically(tmp_path):
    rep = check_system(LIYAU, HEAT, P(4, 0), "A3", "I")
    js = rep.to_json()
    assert js == check_system(LIYAU, HEAT, P(4, 0), "A3", "I").to_json()
    d = json.loads(js)
    assert d["verdict"] == "pass" and d["grid"]["n_t"] == 200 and d["grid"]["n_f"] == 21
    rep.write_margin_csv(tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "t,f,margin_id,margin"
    assert len(lines) == 1 + 200 * 21 * len(rep.margins)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["heat.li_xu", "log.li_yau_case2", "yamabe.case1_3.hamilton", "log.hamilton_pos"]),
       st.integers(20, 80))
def test_refined_grid_never_raises_min_margin(cid, n):
    cand, eq, prm, entry = build_catalog(cid)
    coarse = tf.logspace(1e-3, 10, n)
    fine = np.sort(np.concatenate([coarse, np.sqrt(coarse[:-1] * coarse[1:])]))
    br = entry.branches[0] if entry.branches else None
    r1 = check_system(cand, eq, prm, entry.system, br, coarse)
    r2 = check_system(cand, eq, prm, entry.system, br, fine)
    for k, v in r1.min_margin.items():
        assert r2.min_margin[k] <= v
