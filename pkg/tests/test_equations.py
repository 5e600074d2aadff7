import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from harnackcheck.equations import (
    CurvatureParams, EquationError, Linear, Logarithmic, PowerSum, big_H, equation_from_dict,
    equation_to_dict, h, h1, h2, reaction_terms,
)


def test_big_H_examples():
    assert big_H(Linear(5.0), 2.0) == 10.0
    assert big_H(Logarithmic(2.0), math.e) == pytest.approx(2 * math.e, rel=1e-15)
    assert big_H(PowerSum(((1.0, 0.5),)), 4.0) == pytest.approx(2.0, rel=1e-15)


def test_big_H_rejects_nonpositive():
    with pytest.raises(EquationError):
        big_H(Linear(1.0), 0.0)
    with pytest.raises(EquationError):
        big_H(PowerSum(((1.0, 0.5),)), np.array([1.0, -1.0]))


def test_reaction_examples():
    eq = Logarithmic(2.0)
    assert (h(eq, 3.0), h1(eq, 3.0), h2(eq, 3.0)) == (6.0, 2.0, 0.0)
    eq = Linear(7.0)
    assert (h(eq, -4.0), h1(eq, -4.0), h2(eq, -4.0)) == (7.0, 0.0, 0.0)
    eq = PowerSum(((1.0, 0.5),))
    assert (h(eq, 0.0), h1(eq, 0.0), h2(eq, 0.0)) == (1.0, -0.5, 0.25)


def test_equation_validation():
    with pytest.raises(EquationError):
        Logarithmic(0.0)
    with pytest.raises(EquationError):
        PowerSum(((1.0, 2.0), (1.0, 0.5)))
    with pytest.raises(EquationError):
        PowerSum(())
    with pytest.raises(EquationError):
        CurvatureParams(m=0.0)
    with pytest.raises(EquationError):
        CurvatureParams(m=1.0, K=-1.0)
    with pytest.raises(EquationError):
        CurvatureParams(m=1.0, n=2).require_flat()


def test_yamabe_shorthand():
    assert PowerSum.yamabe(0.0, -1.0, 0.5).terms == ((-1.0, 0.5),)
    assert PowerSum.yamabe(2.0, 1.0, 3.0).terms == ((2.0, 1.0), (1.0, 3.0))
    assert PowerSum.yamabe(2.0, 1.0, -1.0).terms == ((1.0, -1.0), (2.0, 1.0))


def test_dict_round_trip():
    for eq in (Linear(3.0), Logarithmic(-1.0), PowerSum(((1.0, 0.5), (2.0, 3.0)))):
        assert equation_from_dict(equation_to_dict(eq)) == eq
    assert equation_from_dict({"kind": "yamabe", "b": 1.0, "p": 2.0}) == PowerSum(((1.0, 2.0),))
    with pytest.raises(EquationError):
        equation_from_dict({"kind": "cubic"})


def test_clamp_is_flagged():
    _, _, _, clamped = reaction_terms(PowerSum(((1.0, 3.0),)), np.array([0.0, 400.0]))
    assert clamped.tolist() == [False, True]


equations = st.one_of(
    st.builds(Linear, st.floats(-5, 5)),
    st.builds(Logarithmic, st.floats(0.1, 5) | st.floats(-5, -0.1)),
    st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=3, unique_by=lambda t: round(t[1], 3))
    .map(lambda ts: PowerSum(tuple(sorted(ts, key=lambda x: x[1])))),
)


@settings(max_examples=200, deadline=None)
@given(equations, st.floats(-5, 5))
def test_h_is_H_of_exp_over_exp(eq, f):
    assert h(eq, f) == pytest.approx(big_H(eq, math.exp(f)) * math.exp(-f), rel=1e-10, abs=1e-10)


@settings(max_examples=200, deadline=None)
@given(equations, st.floats(-4, 4))
def test_h_derivatives_match_differences(eq, f):
    d = 1e-5
    fd1 = (h(eq, f + d) - h(eq, f - d)) / (2 * d)
    fd2 = (h1(eq, f + d) - h1(eq, f - d)) / (2 * d)
    scale = 1 + abs(h(eq, f)) + abs(h1(eq, f)) + abs(h2(eq, f))
    assert abs(fd1 - h1(eq, f)) <= 1e-6 * scale
    assert abs(fd2 - h2(eq, f)) <= 1e-6 * scale
