"""Tests for the exact series layer.

Expected values here are frozen from independent hand computation (factorial
evaluation, log expansion by hand) rather than from the implementation.
"""

from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tautcalc.series import (
    FormalSeries,
    SeriesError,
    check_hypergeometric_odes,
    check_pixton_identity,
    ct_constants,
    fz_constants,
    h0_coeffs,
    h1_coeffs,
    psi_ct,
    psi_fz,
    rational_str,
    series_A,
    series_B,
    series_from_json,
    series_to_json,
    univariate,
)


def test_series_a_low_order():
    a = series_A(2)
    assert a.coefficient((0,)) == 1
    assert a.coefficient((1,)) == 60
    assert a.coefficient((2,)) == 27720


def test_series_a_order_three_factorials():
    a = series_A(3)
    expected = Fraction(factorial(18), factorial(9) * factorial(6))
    assert expected == 24504480
    assert a.coefficient((3,)) == expected


def test_series_b_literal_first_terms():
    b = series_B(2)
    assert b.coefficient((0,)) == -1
    assert b.coefficient((1,)) == 84
    # h1 = -B(-T) starts 1 + 84T - 32760 T^2
    assert h1_coeffs(2) == [1, 84, -32760]
    assert h0_coeffs(2) == [1, -60, 27720]


def test_pixton_identity_orders():
    assert check_pixton_identity(0)
    assert check_pixton_identity(10)
    assert check_pixton_identity(50)


def test_pixton_identity_mutation_fails():
    order = 6
    a = series_A(order)
    b = series_B(order)
    bad = b + univariate([0, 0, 0, 1], order)
    am = a.scale_var(0, -1)
    lhs = am * bad + a * bad.scale_var(0, -1)
    assert lhs != FormalSeries.constant(-2, a.names, a.trunc)


def test_h_reflection_identity_order_50():
    order = 50
    h0 = univariate(h0_coeffs(order), order, "T")
    h1 = univariate(h1_coeffs(order), order, "T")
    lhs = h0 * h1.scale_var(0, -1) + h0.scale_var(0, -1) * h1
    assert lhs == FormalSeries.constant(2, h0.names, h0.trunc)


def test_hypergeometric_odes():
    assert check_hypergeometric_odes(1)
    assert check_hypergeometric_odes(20)


def test_ode_mutation_fails():
    # replacing B by A breaks the first-order equation
    order = 4
    a = series_A(order + 2)
    t = univariate([0, 1], order + 2)
    res = 864 * t * t * a.diff(0) + (144 * t - 1) * a - a
    assert any(res.coefficient((k,)) for k in range(order + 1))


def test_log_hand_expansion():
    s = univariate([1, 60, 27720], 2)
    ls = s.log()
    assert ls.coefficient((1,)) == 60
    assert ls.coefficient((2,)) == 25920


def test_exp_log_preconditions():
    s = univariate([2, 1], 3)
    with pytest.raises(SeriesError):
        s.log()
    with pytest.raises(SeriesError):
        s.exp()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.fractions(max_denominator=40), min_size=0, max_size=5))
def test_exp_log_roundtrip(tail):
    s = univariate([1] + tail, 6)
    assert s.log().exp() == s
    u = univariate([0] + tail, 6)
    assert u.exp().log() == u


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.fractions(max_denominator=20), min_size=1, max_size=4),
    st.lists(st.fractions(max_denominator=20), min_size=1, max_size=4),
)
def test_arithmetic_stays_reduced(xs, ys):
    a = univariate(xs, 5)
    b = univariate(ys, 5)
    for series in (a + b, a * b, a - b):
        for c in series.coeffs.values():
            assert isinstance(c, Fraction)
            assert c == Fraction(c.numerator, c.denominator)
            assert c.denominator > 0


def test_involutive_exponents_stay_reduced():
    s = FormalSeries(("z",), (((0,), 5),), {(1,): 1}, involutive={0})
    sq = s * s
    assert sq.coefficient((0,)) == 1
    assert all(e[0] in (0, 1) for e in (s * s * s).coeffs)


def test_divide_linear_exact_and_remainder():
    names = ("x", "y")
    trunc = (((1, 1), 6),)
    x = FormalSeries(names, trunc, {(1, 0): 1})
    y = FormalSeries(names, trunc, {(0, 1): 1})
    f = (x + y) * (x * x - y * x * 3 + y * y)
    q = f.divide_linear(0, 1)
    assert q == x * x - 3 * x * y + y * y
    with pytest.raises(SeriesError):
        (x * x).divide_linear(0, 1)


def test_psi_fz_slices():
    psi = psi_fz(3, 4)
    assert "p2" not in psi.names and "p5" not in psi.names
    # p = 0 slice is A
    a = series_A(3)
    for k in range(4):
        e = [0] * len(psi.names)
        e[0] = k
        assert psi.coefficient(tuple(e)) == a.coefficient((k,))
    # p1 coefficient at t^0 is B's constant term
    e = [0] * len(psi.names)
    e[psi.names.index("p1")] = 1
    assert psi.coefficient(tuple(e)) == -1


def test_psi_ct_slices():
    psi = psi_ct(3, 4)
    # p = 0 slice: double factorials 1, 1, 3, 15
    for k, expect in enumerate([1, 1, 3, 15]):
        e = [0] * len(psi.names)
        e[0] = k
        assert psi.coefficient(tuple(e)) == expect
    # bare p1, and p2 t^1 from the even summand
    e = [0] * len(psi.names)
    e[psi.names.index("p1")] = 1
    assert psi.coefficient(tuple(e)) == 1
    e = [0] * len(psi.names)
    e[0] = 1
    e[psi.names.index("p2")] = 1
    assert psi.coefficient(tuple(e)) == 1


def test_constants():
    assert fz_constants(0, ()) == 0
    assert fz_constants(1, ()) == 60
    assert fz_constants(0, (1,)) == -1
    assert ct_constants(0, (1,)) == 1
    with pytest.raises(SeriesError):
        fz_constants(1, (2,))


def test_json_roundtrip():
    s = univariate([Fraction(-13, 30240), 2, 0, Fraction(1, 3)], 5)
    payload = series_to_json(s)
    assert payload["terms"][0]["coefficient"] == "-13/30240"
    back = series_from_json(payload)
    assert back.coeffs == s.coeffs
    assert rational_str(Fraction(4, 2)) == "2"
