"""Peeling kernels: exactness against a direct reference construction,
sampler fidelity, potential kernel, and schedule-independent replication."""

import math
from fractions import Fraction

import numpy as np
import pytest

from forge import peeling
from forge.counts import c1_ratio, z1, z2
from forge.exact import QSqrt3
from forge.peeling import (KILL, default_step_cap, kernel_qInf, kernel_qL,
                           limit_cdf, qk_limit, qneg_cdf_table, run_chain,
                           sample_step_exact, sample_zl, u_kernel)


def reference_kernel_row(L, p):
    """Direct evaluation of q_L(p, .) from the partition functions, with
    each entry computed by an independent exact division (no recurrences)."""
    inv = QSqrt3(0, Fraction(1, 36))  # (12 sqrt(3))^(-1)
    row = {p + 1: inv * z2(L, p + 1) / z2(L, p)}
    for m in range(0, p):
        row[p - m] = 2 * z1(m + 1) * z2(L, p - m) / z2(L, p)
    row[KILL] = L * z1(L + p + 1) / z2(L, p)
    return row


class TestExactKernels:
    @pytest.mark.parametrize("L", [2, 3, 7, 20])
    @pytest.mark.parametrize("p", [1, 2, 5, 13])
    def test_matches_reference_construction(self, L, p):
        kernel = kernel_qL(L, p)
        ref = reference_kernel_row(L, p)
        assert dict(kernel.probs) == ref

    def test_partition_of_unity_is_enforced(self):
        assert kernel_qL(5, 4).total() == QSqrt3(1)

    def test_probabilities_positive(self):
        for _, q in kernel_qL(6, 6).probs:
            assert q.sign() > 0

    def test_limit_row_sums_to_one(self):
        for p in (1, 2, 10, 50):
            assert kernel_qInf(p).total() == QSqrt3(1)

    def test_h_transform_relation(self):
        L, p = 9, 4
        ql = dict(kernel_qL(L, p).probs)
        qi = dict(kernel_qInf(p).probs)
        for t, q in qi.items():
            assert ql[t] * (L + t) == q * (L + p)

    def test_limit_kernel_is_large_L_limit(self):
        p = 3
        qi = dict(kernel_qInf(p).probs)
        ql = dict(kernel_qL(4000, p).probs)
        for t, q in qi.items():
            assert abs(float(ql[t]) - float(q)) < 1e-3

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            kernel_qL(1, 1)
        with pytest.raises(ValueError):
            kernel_qL(2, 0)
        with pytest.raises(ValueError):
            kernel_qInf(0)


class TestLimitIncrementLaw:
    def test_up_probability(self):
        assert qk_limit(1) == QSqrt3(0, Fraction(1, 3))  # 1/sqrt(3)

    def test_matches_limit_kernel_tail_targets(self):
        # q_inf(p, p - m) -> q_{-m} as p grows
        for m in (0, 1, 2):
            approx = float(dict(kernel_qInf(2000).probs)[2000 - m])
            assert abs(approx - float(qk_limit(-m))) < 1e-3

    def test_criticality_partial_sums(self):
        # sum_m m q_{-m} = q_1: partial signed sums stay below q_1
        acc = QSqrt3(0)
        for m in range(1, 200):
            acc = acc + m * qk_limit(-m)
        assert (qk_limit(1) - acc).sign() > 0
        # the signed tail beyond M terms is ~ (3/(2 sqrt(pi))) M^(-1/2)
        assert float(qk_limit(1) - acc) < 1.5 / math.sqrt(math.pi * 199)

    def test_no_up_jumps_above_one(self):
        with pytest.raises(ValueError):
            qk_limit(2)

    def test_qneg_table_matches_exact_law(self):
        table = qneg_cdf_table()
        acc = QSqrt3(0)
        for m in range(0, 50):
            acc = acc + qk_limit(-m)
            assert abs(table[m] - float(acc)) < 1e-12

    def test_u_kernel_values(self):
        # U(1, 1) = sqrt(3), and the ratio U(1, j+1)/U(1, j) follows c1
        assert u_kernel(1) == QSqrt3(0, 1)
        for j in (1, 2, 5):
            lhs = u_kernel(j + 1) * 12
            rhs = u_kernel(j) * QSqrt3(c1_ratio(j + 1, j))
            assert lhs == rhs


class TestSampling:
    def test_sample_step_exact_frequencies(self):
        kernel = kernel_qL(2, 2)
        gen = np.random.default_rng(5)
        n = 20000
        hits = {t: 0 for t, _ in kernel.probs}
        for _ in range(n):
            hits[sample_step_exact(kernel, gen.random())] += 1
        for t, q in kernel.probs:
            prob = float(q)
            se = math.sqrt(prob * (1 - prob) / n)
            assert abs(hits[t] / n - prob) < 5 * se + 1e-4

    def test_run_chain_trace_consistency(self):
        trace = run_chain(8, 3, seed=11)
        assert trace.perimeters[0] == 3
        assert not trace.censored
        assert trace.events[-1] == peeling.KILLED
        # a kill from perimeter p produces a boundary of size p + 1
        assert trace.z == trace.perimeters[-1] + 1
        for k, ev in enumerate(trace.events):
            p_prev, p_next = trace.perimeters[k], trace.perimeters[k + 1]
            if ev == peeling.GROW:
                assert p_next == p_prev + 1
            elif ev == peeling.SWALLOW:
                assert p_next == p_prev - abs(trace.swallowed[k])

    def test_censoring(self):
        trace = run_chain(64, 1, seed=0, step_cap=10)
        assert trace.censored and trace.z is None
        assert len(trace.events) == 10

    def test_sample_zl_schedule_independent(self):
        z1_, c1_ = sample_zl(16, 1, 64, seed=3, n_jobs=1)
        z2_, c2_ = sample_zl(16, 1, 64, seed=3, n_jobs=2)
        assert np.array_equal(z1_, z2_)
        assert np.array_equal(c1_, c2_)

    def test_sample_zl_values_are_boundary_sizes(self):
        z, cens = sample_zl(16, 1, 200, seed=1)
        assert np.all(z[~cens] >= 2)
        assert np.all(z[cens] == -1)

    def test_default_step_cap_scales(self):
        assert default_step_cap(64) == (96 + 192) * 64 * 64
        assert default_step_cap(1024) > 96 * 1024 * 1024


class TestPotentialAndLimitLaw:
    def test_estimate_potential_small_run(self):
        rows = peeling.estimate_potential(3, 4000, seed=2)
        for j, mean, (lo, hi) in rows:
            exact = float(u_kernel(j))
            assert lo <= hi
            # generous gate: 4000 runs, the acceptance run uses 1e5
            assert abs(mean - exact) / exact < 0.2

    def test_limit_cdf(self):
        assert limit_cdf(0.0) == 0.0
        assert abs(limit_cdf(3.0) - 0.875) < 1e-15  # 1 - 4^(-3/2)
        with pytest.raises(ValueError):
            limit_cdf([-0.1])
