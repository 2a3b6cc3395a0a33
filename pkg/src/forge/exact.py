"""Exact arithmetic over the rationals and the field Q(sqrt(3)).

Every peeling probability and partition-function value lives in this field,
so equalities and orderings are decided without any rounding.  Conversion to
binary64 is available with directed rounding for the simulation hot paths.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import total_ordering

try:
    from gmpy2 import mpq as BigRational
except ImportError:  # pragma: no cover - gmpy2 is a soft dependency
    BigRational = Fraction

#: Types accepted wherever a rational is expected.
RATIONAL_TYPES = (int, Fraction, type(BigRational(1)))

_INF = float("inf")
_MAX_FLOAT = math.ldexp(2 - 2**-52, 1023)


def _as_fraction(value):
    if isinstance(value, RATIONAL_TYPES):
        return BigRational(value)
    raise TypeError(f"expected an integer or rational, got {type(value).__name__}")


@total_ordering
class QSqrt3:
    """An element a + b*sqrt(3) with exact rational coefficients a, b."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        object.__setattr__(self, "a", _as_fraction(a))
        object.__setattr__(self, "b", _as_fraction(b))

    def __setattr__(self, name, value):
        raise AttributeError("QSqrt3 values are immutable")

    def __repr__(self):
        return f"QSqrt3({self.a!r}, {self.b!r})"

    def __str__(self):
        return f"{self.a} + {self.b}*sqrt(3)"

    @classmethod
    def _coerce(cls, other):
        if isinstance(other, cls):
            return other
        if isinstance(other, RATIONAL_TYPES):
            return cls(other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return QSqrt3(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return QSqrt3(self.a - other.a, self.b - other.b)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return QSqrt3(other.a - self.a, other.b - self.b)

    def __neg__(self):
        return QSqrt3(-self.a, -self.b)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return QSqrt3(
            self.a * other.a + 3 * self.b * other.b,
            self.a * other.b + self.b * other.a,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        norm = other.a * other.a - 3 * other.b * other.b
        if norm == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt(3))")
        num = self * QSqrt3(other.a, -other.b)
        return QSqrt3(num.a / norm, num.b / norm)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other / self

    def __eq__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __lt__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() < 0

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b))

    def __bool__(self):
        return self.a != 0 or self.b != 0

    def sign(self):
        """Exact sign of a + b*sqrt(3) in {-1, 0, 1}."""
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sb == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb
        # Opposite signs: the larger of a^2 and 3 b^2 decides.
        lhs = self.a * self.a
        rhs = 3 * self.b * self.b
        if lhs == rhs:
            return 0
        return sa if lhs > rhs else sb

    def is_rational(self):
        return self.b == 0

    def _approx_fraction(self):
        """A rational within relative 2**-119 of the value (exact when b = 0)."""
        bits = 120
        root = math.isqrt(3 << (2 * bits))
        sqrt3_lo = BigRational(root, 1 << bits)
        return self.a + self.b * sqrt3_lo

    def _cmp_fraction(self, q):
        return (self - QSqrt3(q)).sign()

    def to_float(self, mode="nearest"):
        """Round to binary64: 'nearest' within 1 ulp, 'down'/'up' directed."""
        if mode not in ("nearest", "down", "up"):
            raise ValueError(f"unknown rounding mode {mode!r}")
        approx = self._approx_fraction()
        if abs(approx) > Fraction(_MAX_FLOAT) * 2:
            raise OverflowError("value exceeds the binary64 range")
        try:
            d = float(approx)
        except OverflowError:
            raise OverflowError("value exceeds the binary64 range") from None
        if math.isinf(d):
            raise OverflowError("value exceeds the binary64 range")
        if mode == "nearest":
            # Walk to the neighbor whenever the exact value lies past a midpoint.
            while True:
                up = math.nextafter(d, _INF)
                if math.isinf(up):
                    break
                mid = (Fraction(d) + Fraction(up)) / 2
                if self._cmp_fraction(mid) > 0:
                    d = up
                else:
                    break
            while True:
                dn = math.nextafter(d, -_INF)
                mid = (Fraction(d) + Fraction(dn)) / 2
                if self._cmp_fraction(mid) < 0:
                    d = dn
                else:
                    break
            return d
        if mode == "down":
            while self._cmp_fraction(Fraction(d)) < 0:
                d = math.nextafter(d, -_INF)
            while True:
                up = math.nextafter(d, _INF)
                if math.isinf(up) or self._cmp_fraction(Fraction(up)) < 0:
                    break
                d = up
            return d
        # mode == "up"
        while self._cmp_fraction(Fraction(d)) > 0:
            d = math.nextafter(d, _INF)
            if math.isinf(d):
                raise OverflowError("value exceeds the binary64 range")
        while True:
            dn = math.nextafter(d, -_INF)
            if self._cmp_fraction(Fraction(dn)) > 0:
                break
            d = dn
        return d

    def __float__(self):
        return self.to_float("nearest")


SQRT3 = QSqrt3(0, 1)
ONE = QSqrt3(1, 0)
ZERO = QSqrt3(0, 0)


def qs3_compare(x, y):
    """Exact three-way comparison: -1, 0 or 1 as x <, =, > y."""
    x = QSqrt3._coerce(x)
    y = QSqrt3._coerce(y)
    return (x - y).sign()


def double_factorial(n):
    """n!! with the conventions (-1)!! = 1 and 0!! = 1."""
    if n < -1:
        raise ValueError(f"double factorial undefined for n = {n}")
    result = 1
    while n > 1:
        result *= n
        n -= 2
    return result


def binomial(n, k):
    """C(n, k), zero outside 0 <= k <= n."""
    if n < 0:
        raise ValueError(f"binomial requires n >= 0, got n = {n}")
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)
