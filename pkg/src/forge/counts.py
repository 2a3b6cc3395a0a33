"""Exact enumeration of type-I triangulations with one or two simple
boundaries, their partition functions, and series cross-checks.

All closed forms are exact in Q(sqrt(3)); the series evaluators work in log
space so that term indices up to a few 10^4 stay cheap.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import zeta

from .exact import QSqrt3, binomial, double_factorial

# Z(1) is not covered by the closed form for Z(L), L >= 2.  Its value
# 1/2 - sqrt(3)/4 follows from the double-factorial series identity
# sum_{m>=1} (2m-3)!!/((m+1)! 2^m) = 1/3 and is re-certified by the exact
# partition-of-unity identity of the peeling kernels (every kernel row
# containing a q(p, p) term sums to 1 only with this value).
Z1_VALUE = QSqrt3(Fraction(1, 2), Fraction(-1, 4))

LOG_12_SQRT3 = math.log(12.0) + 0.5 * math.log(3.0)

# (12*sqrt(3))^(-1) = sqrt(3)/36 exactly.
INV_12_SQRT3 = QSqrt3(0, Fraction(1, 36))


def count_t1(L, k):
    """Number of rooted type-I triangulations with one simple boundary of
    length L and k inner vertices."""
    if L < 1 or k < 0:
        raise ValueError(f"need L >= 1 and k >= 0, got (L, k) = ({L}, {k})")
    if (L, k) == (1, 0):
        return 0
    value = (
        Fraction(4**k, 4)
        * Fraction(double_factorial(2 * L + 3 * k - 5))
        / (math.factorial(k) * double_factorial(2 * L + k - 1))
        * L
        * binomial(2 * L, L)
    )
    if value.denominator != 1:
        raise ArithmeticError(f"count_t1({L}, {k}) is not an integer: {value}")
    return value.numerator


def count_t2(L, p, k):
    """Number of triangulations with two simple boundaries of lengths L and p
    (both rooted) and k inner vertices."""
    if L < 1 or p < 1 or k < 0:
        raise ValueError(f"invalid arguments (L, p, k) = ({L}, {p}, {k})")
    n = L + p
    value = (
        Fraction(4**k)
        * Fraction(double_factorial(2 * n + 3 * k - 2))
        / (math.factorial(k) * double_factorial(2 * n + k))
        * L
        * binomial(2 * L, L)
        * p
        * binomial(2 * p, p)
    )
    if value.denominator != 1:
        raise ArithmeticError(f"count_t2({L}, {p}, {k}) is not an integer: {value}")
    return value.numerator


@lru_cache(maxsize=None)
def z1(L):
    """Partition function Z(L) of Boltzmann triangulations with a boundary of
    length L (closed form for L >= 2, stored derived constant for L = 1)."""
    if L < 1:
        raise ValueError(f"need L >= 1, got {L}")
    if L == 1:
        return Z1_VALUE
    # 6^L (2L-5)!! / (8 sqrt(3) L!)  ==  (0, 6^L (2L-5)!! / (24 L!)).
    return QSqrt3(
        0, Fraction(6**L * double_factorial(2 * L - 5), 24 * math.factorial(L))
    )


@lru_cache(maxsize=None)
def z2(L, p):
    """Two-boundary partition function Z'(L, p), a rational value."""
    if L < 1 or p < 1:
        raise ValueError(f"need L, p >= 1, got ({L}, {p})")
    value = (
        Fraction(1, 2)
        * Fraction(3 ** (L + p), L + p)
        * L
        * binomial(2 * L, L)
        * p
        * binomial(2 * p, p)
    )
    return QSqrt3(value, 0)


def c1_ratio(L2, L1):
    """Exact ratio C1(L2)/C1(L1) of the one-boundary asymptotic constants;
    the transcendental prefactor cancels."""
    if L2 < 1 or L1 < 1:
        raise ValueError(f"need L2, L1 >= 1, got ({L2}, {L1})")
    return (
        Fraction(3) ** (L2 - L1)
        * Fraction(L2 * binomial(2 * L2, L2), L1 * binomial(2 * L1, L1))
    )


def z1_partial(L, K):
    """Exact partial sum of the defining series of Z(L) up to index K."""
    total = QSqrt3(0, 0)
    w = QSqrt3(1, 0)
    for k in range(K + 1):
        total = total + w * count_t1(L, k)
        w = w * INV_12_SQRT3
    return total


def _log_double_factorial(m):
    """log(m!!) for m >= -1 via log-gamma."""
    if m < -1:
        raise ValueError(f"double factorial undefined for {m}")
    if m <= 0:
        return 0.0
    if m % 2 == 1:
        j = (m + 1) // 2
        return math.lgamma(2 * j + 1) - j * math.log(2.0) - math.lgamma(j + 1)
    j = m // 2
    return j * math.log(2.0) + math.lgamma(j + 1)


def _log_t2_term(n, k):
    """log of 4^k (2n+3k-2)!! / (k! (2n+k)!!) / (12 sqrt(3))^k."""
    return (
        k * math.log(4.0)
        + _log_double_factorial(2 * n + 3 * k - 2)
        - math.lgamma(k + 1)
        - _log_double_factorial(2 * n + k)
        - k * LOG_12_SQRT3
    )


def z2_series(L, p, K_max, tail_exponent=None):
    """Numerical evaluation of the defining series of Z'(L, p).

    Returns (partial_sum, tail_estimate).  The tail is extrapolated from a
    power law k^(-e); the exponent is fitted by least squares on the last
    decade of terms unless given explicitly.
    """
    if K_max < 100:
        raise ValueError(f"need K_max >= 100, got {K_max}")
    n = L + p
    log_front = math.log(L * binomial(2 * L, L)) + math.log(p * binomial(2 * p, p))
    ks = np.arange(K_max + 1)
    log_terms = np.array([_log_t2_term(n, int(k)) for k in ks]) + log_front
    partial = float(np.exp(log_terms).sum())

    fit_ks = ks[ks >= K_max // 10 * 9]
    fit_log = log_terms[ks >= K_max // 10 * 9]
    if tail_exponent is None:
        slope = np.polyfit(np.log(fit_ks), fit_log, 1)[0]
        exponent = -slope
    else:
        exponent = float(tail_exponent)
    if exponent <= 1.0:
        raise ArithmeticError(f"fitted tail exponent {exponent} does not converge")
    return partial, _power_tail(log_terms[-1], K_max, exponent)


def _power_tail(log_t_last, K, exponent):
    """Tail sum_{k > K} C k^(-e) with C matched to the last computed term,
    evaluated exactly for the pure power law via the Hurwitz zeta function."""
    c = math.exp(log_t_last + exponent * math.log(K))
    return c * float(zeta(exponent, K + 1))


def _phi_coeff(x):
    """phi(x) = 2x / (1 - 4x)^(3/2), the generating function of n C(2n, n) x^n."""
    return 2.0 * x / (1.0 - 4.0 * x) ** 1.5


def gen_fun_triple(y, z, L_max=60, p_max=60, k_max=20000, quad_points=200):
    """Three independent evaluations of the two-boundary generating function
    G(y, z): truncated double series over raw counts, truncated sum of the
    closed-form Z'(L, p), and quadrature of int_0^3 phi(sy) phi(sz) ds/(2s).
    """
    if not (0.0 < y < 1.0 / 12.0 and 0.0 < z < 1.0 / 12.0):
        raise ValueError(f"(y, z) = ({y}, {z}) outside the joint convergence disc")

    # The k-sum of the weighted counts depends on L, p only through n = L + p.
    n_max = L_max + p_max
    a = np.zeros(n_max + 1)
    for n in range(2, n_max + 1):
        logs = np.array([_log_t2_term(n, k) for k in range(k_max + 1)])
        a[n] = np.exp(logs).sum()
        # The terms decay like k^(-3/2); without the extrapolated tail the
        # truncation error at k_max ~ 2e4 would dominate the 1e-4 target.
        ks_fit = np.arange(k_max - k_max // 10, k_max + 1)
        slope = np.polyfit(np.log(ks_fit), logs[ks_fit], 1)[0]
        # for n near n_max the terms are still pre-asymptotic at k_max and
        # the fitted exponent drifts toward -1, where the zeta tail diverges;
        # those n are damped by the y^L z^p weights far below the target
        # accuracy, so the tail is only added where the fit is in regime
        if slope < -1.05:
            a[n] += _power_tail(logs[-1], k_max, -slope)

    wy = [float(L * binomial(2 * L, L)) * y**L for L in range(1, L_max + 1)]
    wz = [float(p * binomial(2 * p, p)) * z**p for p in range(1, p_max + 1)]
    series = float(sum(
        wy[i] * wz[j] * a[i + j + 2]
        for i in range(L_max)
        for j in range(p_max)
    ))

    closed = float(sum(
        wy[i] * wz[j] * 0.5 * 3.0 ** (i + j + 2) / (i + j + 2)
        for i in range(L_max)
        for j in range(p_max)
    ))

    integrand = lambda s: _phi_coeff(s * y) * _phi_coeff(s * z) / (2.0 * s)
    integral, _ = quad(integrand, 0.0, 3.0, limit=quad_points)
    return series, closed, float(integral)
