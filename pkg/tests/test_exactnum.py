from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvol.exactnum import (
    FloatContext,
    PiMonomial,
    PiPoly,
    TruncatedSeries,
    pi_poly_eval,
    series_mul,
    series_pow,
    sine_quotient_series,
)

rationals = st.fractions(
    min_value=-100, max_value=100, max_denominator=50
)


@given(rationals, rationals, rationals)
def test_rational_field_axioms(a, b, c):
    assert a + (b + c) == (a + b) + c
    assert a * (b * c) == (a * b) * c
    assert a * (b + c) == a * b + a * c
    if b != 0:
        assert (a / b) * b == a


def test_rationals_stored_in_lowest_terms():
    q = Fraction(6, -4)
    assert q.numerator == -3 and q.denominator == 2


# ---------------------------------------------------------------------------
# pi monomials


def test_pi_monomial_normalizes_zero():
    z = PiMonomial(Fraction(0), 5)
    assert z.pi_exp == 0 and z.is_zero
    assert z == PiMonomial.zero()


def test_pi_monomial_arithmetic_and_format():
    m = PiMonomial(Fraction(1, 40), 2)
    assert str(m) == "1/40*pi^4"
    assert PiMonomial.parse("1/40*pi^4") == m
    assert PiMonomial.parse("3/7") == PiMonomial(Fraction(3, 7), 0)
    assert m * 2 == PiMonomial(Fraction(1, 20), 2)
    assert (m * PiMonomial(Fraction(2), 1)).pi_exp == 3
    assert m / 2 == PiMonomial(Fraction(1, 80), 2)
    with pytest.raises(ValueError):
        PiMonomial(Fraction(1), 1) + PiMonomial(Fraction(1), 2)
    assert PiMonomial.zero() + m == m


# ---------------------------------------------------------------------------
# pi polynomials

pi_polys = st.builds(
    lambda pairs: PiPoly(dict(pairs)),
    st.lists(st.tuples(st.integers(0, 5), rationals), max_size=4),
)


@settings(max_examples=150)
@given(pi_polys, pi_polys, pi_polys)
def test_pi_poly_ring_laws(a, b, c):
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


def test_pi_poly_drops_zero_coefficients():
    p = PiPoly({0: Fraction(1), 2: Fraction(0)})
    assert p.items() == [(0, Fraction(1))]
    assert (p - p).is_zero


def test_pi_poly_eval_examples():
    ctx = FloatContext(9)
    assert pi_poly_eval(PiPoly.zero(), ctx) == 0
    val = pi_poly_eval(PiPoly({1: Fraction(-2, 3)}), ctx)
    assert abs(val + 6.57973626) < 1e-7
    # evaluate (-27 pi^2 + pi^4)/72 at 10+ digits
    ctx10 = FloatContext(12)
    val2 = pi_poly_eval(PiPoly({1: Fraction(-27, 72), 2: Fraction(1, 72)}), ctx10)
    assert abs(val2 + 2.34819) < 1e-4


def test_pi_poly_pairs_round_trip():
    p = PiPoly({0: Fraction(4), 2: Fraction(-3, 7)})
    assert PiPoly.from_pairs(p.to_pairs()) == p


# ---------------------------------------------------------------------------
# truncated series


def test_series_mul_examples():
    one_plus = TruncatedSeries([1, 1], 2)
    one_minus = TruncatedSeries([1, -1], 2)
    assert series_mul(one_plus, one_minus) == TruncatedSeries([1, 0, -1], 2)
    a = Fraction(5, 3)
    sq = series_pow(TruncatedSeries([1, 0, a], 4), 2)
    assert sq == TruncatedSeries([1, 0, 2 * a, 0, a * a], 4)


def test_series_pow_quartic_coefficient():
    base = TruncatedSeries([1, 0, Fraction(1, 24), 0, Fraction(3, 640)], 4)
    assert series_pow(base, 4).coefficient(4) == Fraction(7, 240)


def test_series_order_is_min_of_operands():
    a = TruncatedSeries([1, 2, 3], 2)
    b = TruncatedSeries([1, 1, 1, 1], 3)
    assert (a * b).order == 2
    assert (a + b).order == 2


def test_series_reciprocal():
    s = TruncatedSeries([1, Fraction(1, 2), Fraction(-1, 3), Fraction(1, 4)], 3)
    assert s * s.reciprocal() == TruncatedSeries([1, 0, 0, 0], 3)
    with pytest.raises(ZeroDivisionError):
        TruncatedSeries([0, 1], 1).reciprocal()


small_series = st.builds(
    lambda coeffs: TruncatedSeries(coeffs, 6),
    st.lists(rationals, min_size=1, max_size=7),
)


@settings(max_examples=80)
@given(small_series, small_series)
def test_series_mul_commutes(a, b):
    assert a * b == b * a


def test_sine_quotient_series_low_orders():
    s = sine_quotient_series(8)
    assert s.coefficient(0) == 1
    assert s.coefficient(2) == Fraction(1, 24)
    assert s.coefficient(4) == Fraction(7, 5760)
    assert s.coefficient(6) == Fraction(31, 967680)
    assert sine_quotient_series(0) == TruncatedSeries([1], 0)


def test_sine_quotient_series_parity_and_sign():
    s = sine_quotient_series(40)
    for i in range(1, 41, 2):
        assert s.coefficient(i) == 0
    for i in range(2, 41, 2):
        assert s.coefficient(i) > 0


# ---------------------------------------------------------------------------
# float context


def test_float_context_doubled_precision_agreement():
    ctx = FloatContext(30)
    p = PiPoly({1: Fraction(-2, 3), 3: Fraction(5, 7)})
    lo = ctx.eval_pi_poly(p)
    hi = ctx.doubled().eval_pi_poly(p)
    with mpmath.workdps(80):
        rel = abs(mpmath.mpf(lo) - mpmath.mpf(hi)) / abs(mpmath.mpf(hi))
        assert rel < mpmath.mpf(10) ** (5 - ctx.digits)
    assert ctx.stable_digits(lo, hi) >= ctx.digits - 5


def test_float_context_pi_digits():
    ctx = FloatContext(40)
    with mpmath.workdps(60):
        ref = mpmath.mpf(mpmath.pi)
        got = mpmath.mpf(ctx.pi_power(1)) ** Fraction(1, 2)
        assert abs(got - ref) < mpmath.mpf(10) ** (-40)


def test_float_context_rejects_bad_digits():
    with pytest.raises(ValueError):
        FloatContext(0)
