"""Exploration spaces, the cyclic interval pseudo-metric, shortest-path
closure, hulls, geodesics, and boundary curves."""

import math

import numpy as np
import pytest

from forge import geometry, snake
from forge.geometry import (BASE_ATOM, ExplorationSpace, assemble,
                            boundary_curve_gamma_star, correspondence_distortion,
                            d_circ, d_circ_matrix, d_circ_pairs, hull_split,
                            match_positions, metric_closure, select_indices,
                            simple_geodesic)
from forge.snake import GridExcursion, SnakeTree

SQRT3 = math.sqrt(3.0)


def space_from_labels(labels, star_rule=False):
    labels = np.asarray(labels, dtype=np.float64)
    n = len(labels)
    return ExplorationSpace(
        labels=labels, weights=np.zeros(n), anc_min=labels.copy(),
        atom_id=np.full(n, BASE_ATOM, dtype=np.int32),
        point_id=np.arange(n), base_length=1.0, star_rule=star_rule)


def brute_d_circ(labels, i, j, star_rule=False):
    """Independent reference: direct arc minima over the cyclic order."""
    if i == j:
        return 0.0
    lo, hi = min(i, j), max(i, j)
    m1 = min(labels[lo:hi + 1])
    m2 = min(min(labels[hi:]), min(labels[:lo + 1]))
    mx = max(m1, m2)
    if star_rule and mx <= 0.0:
        return math.inf
    return labels[i] + labels[j] - 2.0 * mx


class TestIntervalMetric:
    def test_hand_example(self):
        sp = space_from_labels([1.0, 5.0, 2.0, 4.0, 3.0])
        assert d_circ(sp, 0, 3) == 3.0   # both arc minima are 1
        assert d_circ(sp, 1, 3) == 5.0 + 4.0 - 2.0 * 2.0
        assert d_circ(sp, 2, 2) == 0.0

    @pytest.mark.parametrize("star", [False, True])
    def test_matches_brute_force(self, star):
        gen = np.random.default_rng(9)
        labels = gen.normal(0.5, 1.0, size=40)
        sp = space_from_labels(labels, star_rule=star)
        for i in range(0, 40, 3):
            for j in range(0, 40, 5):
                assert d_circ(sp, i, j) == pytest.approx(
                    brute_d_circ(labels, i, j, star), abs=1e-12)

    def test_lower_bound_by_label_difference(self):
        gen = np.random.default_rng(10)
        labels = gen.normal(0.0, 1.0, size=200)
        sp = space_from_labels(labels)
        i = gen.integers(0, 200, 500)
        j = gen.integers(0, 200, 500)
        d = d_circ_pairs(sp, i, j)
        assert np.all(d >= np.abs(labels[i] - labels[j]) - 1e-12)

    def test_symmetry_and_matrix(self):
        gen = np.random.default_rng(11)
        sp = space_from_labels(gen.normal(0, 1, 30))
        idx = np.array([0, 7, 13, 29])
        m = d_circ_matrix(sp, idx)
        assert np.allclose(m, m.T)
        assert np.all(np.diag(m) == 0.0)


class TestClosure:
    def test_matches_floyd_warshall_reference(self):
        gen = np.random.default_rng(12)
        sp = space_from_labels(gen.normal(0.5, 1, 50))
        idx = np.arange(0, 50, 7)
        ms = metric_closure(sp, 0, 0, indices=idx)
        ref = d_circ_matrix(sp, idx)
        k = len(idx)
        for a in range(k):
            for b in range(k):
                for c in range(k):
                    ref[b, c] = min(ref[b, c], ref[b, a] + ref[a, c])
        assert np.allclose(ms.dists, ref)

    def test_closure_never_exceeds_direct_distance(self):
        gen = np.random.default_rng(13)
        sp = space_from_labels(gen.normal(0.5, 1, 60))
        idx = np.arange(0, 60, 4)
        ms = metric_closure(sp, 0, 0, indices=idx)
        assert np.all(ms.dists <= d_circ_matrix(sp, idx) + 1e-12)

    def test_triangle_inequality_fixed_point(self):
        gen = np.random.default_rng(14)
        sp = space_from_labels(gen.normal(0.5, 1, 60))
        ms = metric_closure(sp, 12, seed=3)
        d = ms.dists
        n = len(ms.indices)
        for a in range(n):
            assert np.all(d <= d[:, a:a + 1] + d[a:a + 1, :] + 1e-12)

    def test_select_indices_pins_and_size(self):
        gen = np.random.default_rng(15)
        sp = space_from_labels(gen.normal(0.5, 1, 80))
        idx = select_indices(sp, 10, seed=1, pins=(41,))
        assert len(idx) == 10
        assert 41 in idx
        assert 0 in idx and sp.n - 1 in idx
        assert int(np.argmin(sp.labels)) in idx


def tiny_disk():
    """Base excursion with one grafted atom that dips below zero."""
    base = GridExcursion(1.0, np.array([0.0, 0.2, 0.5, 0.3, 0.0]),
                         "brownian_excursion")
    delta = 0.01
    contour = np.array([0, 1, 2, 1, 0, 1, 0]) * math.sqrt(delta)
    head = np.array([0.85, 0.4, -0.2, 0.4, 0.85, 1.2, 0.85])
    anc = np.array([0.85, 0.4, -0.2, 0.4, 0.85, 0.85, 0.85])
    atom = SnakeTree(0.3, 0.85, 6 * delta, delta, contour, head, anc)
    return base, atom


class TestAssemble:
    def test_layout_and_weights(self):
        base, atom = tiny_disk()
        sp = assemble(base, [atom], "full")
        # base[0:2], atom (7 points), base[2:5]
        assert sp.n == 2 + 7 + 3
        assert np.allclose(sp.labels[:2], SQRT3 * base.values[:2])
        assert np.allclose(sp.labels[2:9], atom.head)
        assert np.allclose(sp.labels[9:], SQRT3 * base.values[2:])
        assert sp.weights[2] == 0.0                   # atom root carries 0
        assert sp.total_volume == pytest.approx(atom.sigma)
        assert np.all(sp.weights[np.flatnonzero(sp.atom_id == BASE_ATOM)] == 0)

    def test_truncated_mode_requires_truncation(self):
        base, atom = tiny_disk()
        with pytest.raises(ValueError):
            assemble(base, [atom], "truncated")
        tr = snake.truncate(atom, 0.0)
        sp = assemble(base, [tr], "truncated")
        assert sp.star_rule
        assert sp.n == 2 + 6 + 3   # one point pruned

    def test_point_ids_survive_truncation(self):
        base, atom = tiny_disk()
        full = assemble(base, [atom], "full")
        star = assemble(base, [snake.truncate(atom, 0.0)], "truncated")
        pairs = match_positions(star, full)
        assert len(pairs) == star.n
        for a, b in pairs:
            assert star.atom_id[a] == full.atom_id[b]
            # labels agree except at crossing revisits, relabeled exactly 0
            assert star.labels[a] in (full.labels[b], 0.0)

    def test_unsorted_atoms_rejected(self):
        base, atom = tiny_disk()
        atom2 = SnakeTree(0.1, atom.root_label, atom.sigma, atom.delta,
                          atom.contour, atom.head, atom.anc_min)
        with pytest.raises(ValueError):
            assemble(base, [atom, atom2], "full")


class TestHullAndGeodesics:
    def test_hull_split(self):
        base, atom = tiny_disk()
        sp = assemble(base, [atom], "full")
        interior, hull_mask, r0 = hull_split(sp, 0.0)
        assert np.array_equal(interior, sp.anc_min > 0.0)
        assert np.all(interior == ~hull_mask)
        assert r0 == pytest.approx(0.2)

    def test_simple_geodesic_telescopes(self):
        gen = np.random.default_rng(16)
        sp = space_from_labels(gen.normal(1.0, 1.0, 100))
        i = 37
        chain = simple_geodesic(sp, i, toward_end=True)
        labels = sp.labels[chain]
        assert np.all(np.diff(labels) < 0)
        drops = -np.diff(labels).sum()
        assert drops == pytest.approx(sp.labels[i] - sp.labels[i:].min())
        chain_back = simple_geodesic(sp, i, toward_end=False)
        assert chain_back[0] == i

    def test_boundary_curve(self):
        base, atom = tiny_disk()
        star = assemble(base, [snake.truncate(atom, 0.0)], "truncated")
        eps = 0.5
        curve = boundary_curve_gamma_star(star, eps)
        assert np.all(np.diff(curve.times) >= 0)
        n_window = int(np.count_nonzero(
            (star.atom_id != BASE_ATOM) & (star.labels < eps)
            & (star.weights > 0)))
        assert curve.length == pytest.approx(
            1.0 + n_window * atom.delta / eps ** 2)
        assert curve.positions[-1] == 0
        assert curve.clock[0] == 0 and curve.clock[-1] == 1
        with pytest.raises(ValueError):
            boundary_curve_gamma_star(assemble(base, [atom], "full"), eps)


class TestDistortion:
    def test_zero_for_identical_samples(self):
        gen = np.random.default_rng(17)
        sp = space_from_labels(gen.normal(0.5, 1, 40))
        idx = np.arange(0, 40, 5)
        ms = metric_closure(sp, 0, 0, indices=idx)
        pairs = [(k, k) for k in range(len(idx))]
        assert correspondence_distortion(ms, ms, pairs) == 0.0

    def test_detects_perturbation(self):
        gen = np.random.default_rng(18)
        sp = space_from_labels(gen.normal(0.5, 1, 40))
        idx = np.arange(0, 40, 5)
        ms = metric_closure(sp, 0, 0, indices=idx)
        other = geometry.MetricSample(indices=ms.indices,
                                      dists=ms.dists + 0.25)
        pairs = [(k, k) for k in range(len(idx))]
        np.fill_diagonal(other.dists, 0.0)
        assert correspondence_distortion(ms, other, pairs) == \
            pytest.approx(0.25)

    def test_incomplete_pairs_rejected(self):
        gen = np.random.default_rng(19)
        sp = space_from_labels(gen.normal(0.5, 1, 40))
        ms = metric_closure(sp, 0, 0, indices=np.arange(0, 40, 5))
        with pytest.raises(ValueError):
            correspondence_distortion(ms, ms, [(0, 0)])
