"""Field arithmetic in Q(sqrt(3)): axioms, exact sign, directed rounding."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forge.exact import (QSqrt3, SQRT3, ONE, ZERO, qs3_compare,
                         double_factorial, binomial)

rationals = st.fractions(
    min_value=-100, max_value=100, max_denominator=64)
elements = st.builds(QSqrt3, rationals, rationals)


def as_real(x):
    """Independent high-precision reference value of a + b sqrt(3)."""
    bits = 200
    root = Fraction(math.isqrt(3 << (2 * bits)), 1 << bits)
    return Fraction(x.a) + Fraction(x.b) * root


class TestFieldAxioms:
    @given(elements, elements)
    @settings(max_examples=80, deadline=None)
    def test_commutativity(self, x, y):
        assert x + y == y + x
        assert x * y == y * x

    @given(elements, elements, elements)
    @settings(max_examples=80, deadline=None)
    def test_distributivity(self, x, y, z):
        assert x * (y + z) == x * y + x * z

    @given(elements)
    @settings(max_examples=80, deadline=None)
    def test_additive_inverse(self, x):
        assert x + (-x) == ZERO
        assert x - x == ZERO

    @given(elements)
    @settings(max_examples=80, deadline=None)
    def test_multiplicative_inverse(self, x):
        if x == ZERO:
            with pytest.raises(ZeroDivisionError):
                _ = ONE / x
        else:
            assert ONE / x * x == ONE

    def test_sqrt3_squares_to_three(self):
        assert SQRT3 * SQRT3 == QSqrt3(3)

    def test_rational_interop(self):
        assert QSqrt3(Fraction(1, 2)) + Fraction(1, 2) == 1
        assert 2 * SQRT3 == QSqrt3(0, 2)
        assert (1 - SQRT3) + SQRT3 == ONE
        assert QSqrt3(6) / 2 == QSqrt3(3)
        assert 3 / QSqrt3(0, 1) == SQRT3


class TestSignAndOrder:
    def test_sign_hard_cases(self):
        # 97/56 and 26/15 are continued-fraction convergents of sqrt(3):
        # the difference is far below float precision but exactly signed.
        assert QSqrt3(97, -56).sign() == 1     # 97 > 56 sqrt(3) by 9409 vs 9408
        assert QSqrt3(-97, 56).sign() == -1
        assert QSqrt3(26, -15).sign() == 1     # 676 vs 675
        assert QSqrt3(-26, 15).sign() == -1
        assert QSqrt3(0, 0).sign() == 0
        assert QSqrt3(Fraction(-1, 10**40), 0).sign() == -1

    @given(elements)
    @settings(max_examples=120, deadline=None)
    def test_sign_matches_reference(self, x):
        r = as_real(x)
        assert x.sign() == (r > 0) - (r < 0)

    @given(elements, elements)
    @settings(max_examples=80, deadline=None)
    def test_order_matches_reference(self, x, y):
        assert (x < y) == (as_real(x) < as_real(y))
        assert qs3_compare(x, y) == -qs3_compare(y, x)

    def test_hash_consistent_with_rational_equality(self):
        assert hash(QSqrt3(Fraction(3, 4))) == hash(Fraction(3, 4))
        assert QSqrt3(Fraction(3, 4)) == Fraction(3, 4)
        d = {QSqrt3(5): "a"}
        assert d[5] == "a"


class TestRounding:
    @given(elements)
    @settings(max_examples=100, deadline=None)
    def test_directed_rounding_brackets(self, x):
        lo = x.to_float("down")
        hi = x.to_float("up")
        near = x.to_float("nearest")
        r = as_real(x)
        assert Fraction(lo) <= r <= Fraction(hi)
        assert near in (lo, hi)
        if lo != hi:
            assert math.nextafter(lo, math.inf) == hi

    def test_nearest_picks_closer_neighbor(self):
        x = QSqrt3(0, 1)
        d = x.to_float("nearest")
        lo, hi = x.to_float("down"), x.to_float("up")
        r = as_real(x)
        err = abs(Fraction(d) - r)
        assert err <= abs(Fraction(lo) - r) and err <= abs(Fraction(hi) - r)
        assert d == math.sqrt(3.0)

    def test_exact_values_round_trip(self):
        assert QSqrt3(Fraction(1, 2)).to_float("down") == 0.5
        assert QSqrt3(Fraction(1, 2)).to_float("up") == 0.5
        assert float(QSqrt3(-3)) == -3.0

    def test_overflow_raises(self):
        with pytest.raises(OverflowError):
            QSqrt3(Fraction(10 ** 400)).to_float()

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            QSqrt3(1).to_float("sideways")


class TestImmutability:
    def test_set_attr_rejected(self):
        x = QSqrt3(1, 2)
        with pytest.raises(AttributeError):
            x.a = Fraction(5)

    def test_float_input_rejected(self):
        with pytest.raises(TypeError):
            QSqrt3(0.5)


class TestCombinatorics:
    def test_double_factorial(self):
        assert [double_factorial(n) for n in (-1, 0, 1, 2, 3, 4, 5, 6)] == \
            [1, 1, 1, 2, 3, 8, 15, 48]
        with pytest.raises(ValueError):
            double_factorial(-2)

    def test_binomial(self):
        assert binomial(4, 2) == 6
        assert binomial(4, -1) == 0
        assert binomial(4, 5) == 0
        with pytest.raises(ValueError):
            binomial(-1, 0)
