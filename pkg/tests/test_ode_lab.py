import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from harnackcheck.ode_lab import (
    BLOWUP_THRESHOLD, a_eps_curve, a_eps_monotone, blowup_rhs, blowup_time_rk4, build_l, comparison_log,
    comparison_log_constant, comparison_power, continuation_bound, cross_check_rk4, liouville_F_exact,
    liouville_F_log, OdeError, solve_blowup, u0_reference, write_a_eps_csv,
)
from harnackcheck.pde_lab import ExactLogSolution


# The blow-up ODE separates: with w = 1/m, w' + (1 + w) g(t) = 0 for the rational factor g,
# so m = 1/((1 + 1/ε) e^{-G} - 1), G(t) = -3at - 2 ln((3e^{-at} - 1)/2).
def G(a, t):
    return -3 * a * t - 2 * np.log((3 * np.exp(-a * t) - 1) / 2)


def closed_form(a, eps, t):
    return 1.0 / ((1 + 1 / eps) * np.exp(-G(a, t)) - 1)


def closed_form_crossing(a, eps, level):
    target = math.log1p(1 / eps) - math.log1p(1 / level)
    hi = 1.0
    while G(a, hi) < target:
        hi *= 2
    return brentq(lambda t: G(a, t) - target, 0.0, hi, xtol=1e-15, rtol=1e-15)


@pytest.mark.parametrize("a,eps", [(-1.0, 0.1), (-1.0, 1e-3), (-2.0, 0.05), (-0.5, 1e-5)])
def test_trajectory_matches_closed_form(a, eps):
    tr = solve_blowup(a, eps, t_max=100.0)
    assert tr.status == "blew_up"
    t = np.linspace(0, 0.95 * tr.event_time, 200)
    ref = closed_form(a, eps, t)
    assert np.max(np.abs(tr(t) - ref) / ref) < 1e-8
    A = closed_form_crossing(a, eps, BLOWUP_THRESHOLD)
    assert tr.event_time == pytest.approx(A, rel=1e-8)


def test_blowup_times_against_separated_solution():
    # true blow-up: G(A) = ln(1 + 1/ε); the threshold crossing sits just below it
    for eps, A in ((0.1, 3.180934018766797), (1e-3, 7.7193888856547765)):
        exact = brentq(lambda t: G(-1.0, t) - math.log1p(1 / eps), 0.0, 50.0, xtol=1e-15)
        assert exact == pytest.approx(A, rel=1e-12)
        tr = solve_blowup(-1.0, eps)
        assert 0 < exact - tr.event_time < 1e-6


def test_zero_and_vanishing_eps():
    tr = solve_blowup(-1.0, 0.0)
    assert tr.status == "completed" and np.all(tr.values == 0)
    sup = [float(np.max(np.abs(solve_blowup(-1.0, e, t_max=5.0).values))) for e in (1e-4, 1e-6, 1e-8)]
    assert sup[0] > sup[1] > sup[2] and sup[2] < 1e-5


def test_rhs_vanishes_at_start_and_zero():
    assert blowup_rhs(0.0, 0.3, -1.0) == 0.0
    assert blowup_rhs(1.0, 0.0, -1.0) == 0.0


def test_input_errors():
    with pytest.raises(OdeError):
        solve_blowup(1.0, 0.1)
    with pytest.raises(OdeError):
        solve_blowup(-1.0, -0.1)
    with pytest.raises(OdeError):
        a_eps_curve(-1.0, [0.1, 0.0])
    with pytest.raises(OdeError):
        build_l(-1.0, 0.0)


def test_rk4_cross_check():
    tr = solve_blowup(-1.0, 0.1)
    rel, n = cross_check_rk4(-1.0, 0.1, tr)
    assert rel < 1e-8 and n >= 1000


@pytest.mark.parametrize("eps", [0.2, 0.1, 0.025, 1e-3])
def test_reciprocal_rk4_blowup_time(eps):
    A = blowup_time_rk4(-1.0, eps)
    assert A == pytest.approx(closed_form_crossing(-1.0, eps, BLOWUP_THRESHOLD), rel=1e-9)
    assert A == pytest.approx(solve_blowup(-1.0, eps).event_time, rel=1e-9)


def test_reciprocal_rk4_caps():
    assert blowup_time_rk4(-1.0, 1e-6, t_max=10.0) is None
    assert blowup_time_rk4(-1.0, 0.0) is None


def test_a_eps_curve_examples(tmp_path):
    curve = a_eps_curve(-1.0, [0.2, 0.1, 0.05, 0.025])
    A = [p.A_eps for p in curve]
    assert all(x < y for x, y in zip(A, A[1:])) and not any(p.capped for p in curve)
    assert a_eps_monotone(curve)
    assert len(a_eps_curve(-1.0, [0.1])) == 1
    capped = a_eps_curve(-1.0, [1e-6], t_max=10.0)[0]
    assert capped.capped and capped.A_eps == 10.0
    write_a_eps_csv(curve + [capped], tmp_path / "a.csv")
    rows = (tmp_path / "a.csv").read_text().splitlines()
    assert rows[0] == "eps,A_eps,capped_flag" and rows[-1].endswith(",1")


def test_continuation_lower_bound():
    for eps in (0.2, 0.1, 0.05, 0.025):
        tr = solve_blowup(-1.0, eps)
        c = continuation_bound(-1.0, tr)
        assert c["holds"] and c["A_eps"] >= c["bound"] > 0
        assert c["delta0"] == pytest.approx(1 / 48)


def test_build_l_piecewise():
    a, eps = -1.0, 0.1
    l = build_l(a, eps)
    v, d = l(np.array([0.1, 0.5, math.log(3) - 1e-9]))
    assert np.all(v == eps) and np.all(d == 0)
    tr = solve_blowup(a, eps, t_max=100.0)
    assert l.value(np.array([math.log(3) + 1]))[0] == pytest.approx(tr(1.0), rel=1e-9)
    # derivative is continuous at the junction
    assert abs(l.deriv(np.array([math.log(3) + 1e-9]))[0]) < 1e-8
    assert l.t_end == pytest.approx(math.log(3) + tr.event_time, rel=1e-9)
    assert np.isnan(l.value(np.array([l.t_end + 1]))[0])


def test_comparison_log_examples():
    v = comparison_log(-1.0, -1.0, 0.0)
    assert v.value(np.array([-1.0]))[0] == pytest.approx(-math.e, rel=1e-15)
    assert np.all(comparison_log(-1.0, 0.0, 0.0).value(np.linspace(-3, 3, 7)) == 0)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([-2.0, -1.0, 0.5, 1.5]), st.floats(-3, 3), st.floats(0.2, 3), st.floats(0.5, 4),
       st.floats(0.05, 2))
def test_forced_comparison_solves_its_ode(a, f0, t0, m, dt):
    v = comparison_log(a, f0, t0, m)
    assert v.value(np.array([t0]))[0] == pytest.approx(f0, abs=1e-12)
    t = np.array([t0 + dt])
    val, der = v(t)
    assert der[0] == pytest.approx(m * a / (2 * math.expm1(-a * t[0])) + a * val[0], rel=1e-12, abs=1e-12)
    h = 1e-6
    fd = (v.value(t + h)[0] - v.value(t - h)[0]) / (2 * h)
    assert fd == pytest.approx(der[0], rel=1e-6, abs=1e-6)
    c = comparison_log_constant(a, m, f0, t0)
    alt = -(m / 2) * math.exp(a * t[0]) * math.log(abs(math.expm1(-a * t[0]))) + c * math.exp(a * t[0])
    assert val[0] == pytest.approx(alt, rel=1e-10, abs=1e-10)


def test_comparison_power_examples():
    assert comparison_power(1.0, 0.5, 1.0, 0.0).vanishing_time == -2.0
    assert u0_reference(1.0, 0.5, 4.0) == 4.0
    assert comparison_power(1.0, 0.5, 0.0, 0.0).vanishing_time == 0.0
    with pytest.raises(OdeError):
        comparison_power(1.0, 1.0, 1.0)
    with pytest.raises(OdeError):
        comparison_power(-1.0, 0.5, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 5), st.floats(-2, 0.9), st.floats(0.01, 10), st.floats(-3, 3))
def test_power_comparison_solves_its_ode(a1, p1, u0, t0):
    c = comparison_power(a1, p1, u0, t0)
    T = c.vanishing_time
    # zero just before T, positive just after
    d = 1e-9 * (1 + abs(T))
    assert c(T - d) == 0.0 and c(T + d) > 0.0
    assert c(t0) == pytest.approx(u0, rel=1e-12)
    t = t0 + 0.3
    h = 1e-6 * max(1, abs(t))
    fd = (c(t + h) - c(t - h)) / (2 * h)
    assert fd == pytest.approx(a1 * c(t) ** p1, rel=1e-5)
    # the space-independent reference solution is the comparison through t0 = 0 from 0
    assert comparison_power(a1, p1, 0.0, 0.0)(1.7) == pytest.approx(u0_reference(a1, p1, 1.7), rel=1e-12)


def test_liouville_examples():
    sol = ExactLogSolution(-1.0, 1, (0.4,), 0.7)
    ts = np.linspace(0.2, 4, 9)
    at_center = [liouville_F_log(-1.0, 1.0, float(sol.f(0.4, t)), t) for t in ts]
    assert np.allclose(at_center, 0.7, atol=1e-12)
    sol = ExactLogSolution(1.0, 1, (0.0,), 0.2)
    vals = [liouville_F_log(1.0, 1.0, float(sol.f(1.3, t)), t) for t in ts]
    assert all(x < y for x, y in zip(vals, vals[1:]))
    a = -0.8
    assert liouville_F_log(a, 3.0, 0.0, -math.log(2) / a) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([-2.0, -1.0, 1.0, 2.0]), st.floats(-2, 2), st.floats(0.05, 3), st.floats(-1, 1),
       st.integers(1, 3))
def test_liouville_closed_form_on_exact_family(a, x, t, C, extra):
    sol = ExactLogSolution(a, 1, (0.25,), C)
    for m in (1.0, 1.0 + extra):
        direct = liouville_F_log(a, m, float(sol.f(x, t)), t)
        assert direct == pytest.approx(float(liouville_F_exact(sol, m, x, t)), rel=1e-10, abs=1e-10)
    closed = C + a * (x - 0.25) ** 2 / (4 * (1 - math.exp(a * t)))
    assert liouville_F_log(a, 1.0, float(sol.f(x, t)), t) == pytest.approx(closed, rel=1e-10, abs=1e-10)
