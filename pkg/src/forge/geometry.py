"""Exploration spaces built from a base excursion with grafted snake trees,
the label/running-minimum interval pseudo-metric, subsampled shortest-path
metric closure, hull splitting by ancestral minima, boundary curves clocked
by arc length and exit local time, and correspondence distortion.

The exploration concatenates the base grid points in order, inserting each
tree's contour points at its root time.  Distances start from the cyclic
interval pseudo-metric d(i,j) = l_i + l_j - 2 max(min over either arc) and
are closed under the triangle inequality by all-pairs shortest paths over a
K-point subsample; the closure is an upper bound of the continuum metric.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import shortest_path

SQRT3 = math.sqrt(3.0)

BASE_ATOM = -1


@dataclass
class ExplorationSpace:
    """Exploration-ordered points with labels, tree volume weights, and
    ancestral label minima.  point_id keeps each point's pre-truncation grid
    index so spaces built from the same forest can be matched point-to-point."""

    labels: np.ndarray
    weights: np.ndarray
    anc_min: np.ndarray
    atom_id: np.ndarray  # BASE_ATOM for base-segment points
    point_id: np.ndarray  # base grid index, or grid index within the atom
    base_length: float
    cyclic: bool = True
    star_rule: bool = False
    _rmq: list = field(default=None, repr=False, compare=False)

    @property
    def n(self):
        return len(self.labels)

    @property
    def total_volume(self):
        return float(self.weights.sum())

    def rmq(self):
        if self._rmq is None:
            tables = [self.labels]
            k = 1
            while 2 * k <= len(self.labels):
                prev = tables[-1]
                tables.append(np.minimum(prev[:-k], prev[k:]))
                k *= 2
            self._rmq = tables
        return self._rmq


def _range_min(tables, lo, hi):
    """Minimum label over inclusive index ranges, vectorized; empty ranges
    (lo > hi) give +inf."""
    lo = np.asarray(lo)
    hi = np.asarray(hi)
    out = np.full(lo.shape, np.inf)
    ok = lo <= hi
    if not np.any(ok):
        return out
    span = hi[ok] - lo[ok] + 1
    k = np.frexp(span)[1] - 1  # floor(log2(span))
    mins = np.empty(span.shape)
    for kk in np.unique(k):
        t = tables[kk]
        size = 1 << int(kk)
        m = k == kk
        mins[m] = np.minimum(t[lo[ok][m]], t[hi[ok][m] - size + 1])
    out[ok] = mins
    return out


def assemble(base, atoms, mode="full"):
    """Exploration space from a base excursion and snake trees sorted by
    root time.  Modes: "full" (plain), "truncated" (atoms pruned at level 0,
    star rule on), "prime" (pointed-disk base; labels are sqrt(3) times base
    values in every mode).  Base points carry volume weight 0, tree points
    delta each (roots excluded), so the total volume is the sum of sigmas."""
    if mode not in ("full", "truncated", "prime"):
        raise ValueError(f"unknown mode {mode!r}")
    times = [a.root_time for a in atoms]
    if any(t2 < t1 for t1, t2 in zip(times, times[1:])):
        raise ValueError("atoms must be sorted by root_time")
    if mode == "truncated" and any(a.truncated_at != 0.0 for a in atoms):
        raise ValueError("truncated mode requires atoms truncated at 0")
    dt = base.duration / base.n
    base_labels = SQRT3 * base.values
    base_ids = np.arange(base.n + 1)
    lab, wgt, amin, aid, pid = [], [], [], [], []
    cursor = 0
    for i, a in enumerate(atoms):
        cut = min(int(a.root_time / dt) + 1, base.n + 1)
        if cut > cursor:
            seg = slice(cursor, cut)
            lab.append(base_labels[seg])
            wgt.append(np.zeros(cut - cursor))
            amin.append(base_labels[seg])
            aid.append(np.full(cut - cursor, BASE_ATOM, dtype=np.int32))
            pid.append(base_ids[seg])
            cursor = cut
        m = len(a.head)
        lab.append(a.head)
        w = np.full(m, a.delta)
        w[0] = 0.0
        wgt.append(w)
        amin.append(a.anc_min)
        aid.append(np.full(m, i, dtype=np.int32))
        pid.append(a.orig_idx if a.orig_idx is not None else np.arange(m))
    if cursor <= base.n:
        seg = slice(cursor, base.n + 1)
        lab.append(base_labels[seg])
        wgt.append(np.zeros(base.n + 1 - cursor))
        amin.append(base_labels[seg])
        aid.append(np.full(base.n + 1 - cursor, BASE_ATOM, dtype=np.int32))
        pid.append(base_ids[seg])
    return ExplorationSpace(
        labels=np.concatenate(lab),
        weights=np.concatenate(wgt),
        anc_min=np.concatenate(amin),
        atom_id=np.concatenate(aid),
        point_id=np.concatenate(pid).astype(np.int64),
        base_length=base.duration,
        star_rule=(mode == "truncated"),
    )


def d_circ_pairs(space, i, j):
    """Cyclic interval pseudo-metric for index arrays i, j:
    l_i + l_j - 2 max(min over arc [i..j], min over arc [j..i]);
    with the star rule, +inf whenever that max is <= 0."""
    i = np.asarray(i)
    j = np.asarray(j)
    lab = space.labels
    tables = space.rmq()
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    m1 = _range_min(tables, lo, hi)
    m2 = np.minimum(_range_min(tables, hi, np.full(hi.shape, space.n - 1)),
                    _range_min(tables, np.zeros(lo.shape, dtype=lo.dtype), lo))
    mx = np.maximum(m1, m2)
    d = lab[i] + lab[j] - 2.0 * mx
    if space.star_rule:
        d = np.where(mx <= 0.0, np.inf, d)
    return np.where(i == j, 0.0, d)


def d_circ(space, i, j):
    """Scalar cyclic interval pseudo-metric (see d_circ_pairs)."""
    return float(d_circ_pairs(space, np.array([i]), np.array([j]))[0])


def d_circ_matrix(space, indices):
    idx = np.asarray(indices)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    return d_circ_pairs(space, ii.ravel(), jj.ravel()).reshape(len(idx), len(idx))


@dataclass
class MetricSample:
    """Closure of the interval pseudo-metric over a point subsample."""

    indices: np.ndarray
    dists: np.ndarray
    closed: bool = True


def select_indices(space, K, seed, restrict=None, pins=()):
    """K exploration positions: pinned and distinguished points (base
    endpoints, global label minimum, per-atom label extremes) plus a
    stratified draw over the exploration order."""
    allowed = np.arange(space.n) if restrict is None else np.flatnonzero(restrict)
    if len(allowed) == 0:
        raise ValueError("empty restriction")
    if K > len(allowed):
        warnings.warn(f"K={K} clamped to {len(allowed)} allowed points")
        K = len(allowed)
    ok = np.zeros(space.n, dtype=bool)
    ok[allowed] = True
    mand = set(int(p) for p in pins if ok[int(p)])
    for cand in (0, space.n - 1, int(allowed[np.argmin(space.labels[allowed])])):
        if ok[cand]:
            mand.add(cand)
    for a in range(int(space.atom_id.max()) + 1 if len(space.atom_id) else 0):
        pos = np.flatnonzero((space.atom_id == a) & ok)
        if len(pos):
            mand.add(int(pos[np.argmin(space.labels[pos])]))
            mand.add(int(pos[np.argmax(space.labels[pos])]))
    mand = sorted(mand)[:K]
    gen = np.random.default_rng(seed)
    chosen = set(mand)
    n_extra = K - len(chosen)
    if n_extra > 0:
        edges = np.linspace(0, len(allowed), n_extra + 1).astype(int)
        for a, b in zip(edges[:-1], edges[1:]):
            if b > a:
                chosen.add(int(allowed[a + int(gen.integers(b - a))]))
        pool = [int(x) for x in allowed if int(x) not in chosen]
        if len(chosen) < K and pool:
            extra = gen.choice(len(pool), size=min(K - len(chosen), len(pool)),
                               replace=False)
            chosen.update(pool[e] for e in extra)
    return np.array(sorted(chosen))


def metric_closure(space, K, seed, restrict=None, pins=(), indices=None):
    """All-pairs shortest-path closure of the interval pseudo-metric over a
    K-point subsample (or over explicitly given indices).  With restrict,
    chains may only pass through points satisfying the mask; the result is
    the exact fixed point of triangle relaxation on the chosen points."""
    if indices is None:
        if K < 2:
            raise ValueError(f"need K >= 2, got {K}")
        indices = select_indices(space, K, seed, restrict=restrict, pins=pins)
    indices = np.asarray(indices)
    w = d_circ_matrix(space, indices)
    method = "FW" if len(indices) <= 768 else "D"
    dists = shortest_path(w, method=method, directed=False)
    return MetricSample(indices=indices, dists=dists)


def hull_split(space, r):
    """Split by the ancestral-minimum criterion: interior points have
    m_x > r; returns (interior_mask, hull_mask, r0) with r0 = -min label."""
    interior = space.anc_min > r
    return interior, ~interior, float(-space.labels.min())


def simple_geodesic(space, i, toward_end):
    """Successor chain of strictly decreasing running minima from point i
    along the arc toward the exploration end (or start); consecutive label
    drops telescope to l_i minus the arc minimum."""
    if toward_end:
        arc = np.arange(i, space.n)
    else:
        arc = np.arange(i, -1, -1)
    labels = space.labels[arc]
    run = np.minimum.accumulate(labels)
    steps = np.concatenate(([0], np.flatnonzero(np.diff(run) < 0) + 1))
    return arc[steps]


@dataclass
class BoundaryCurveSample:
    """Boundary curve: base segment clocked by arc length, pruned boundary
    clocked by exit local time in reversed exploration order."""

    times: np.ndarray
    positions: np.ndarray
    clock: np.ndarray  # 0 = arc length, 1 = exit local time

    @property
    def length(self):
        return float(self.times[-1])


def boundary_curve_gamma_star(space, eps):
    """Curve of parameter length xi + total exit measure over a truncated
    space: the base in exploration order on [0, xi], then the near-zero tree
    points in reversed exploration order, each advancing the clock by
    delta/eps^2.  The final entry closes the loop at exploration position 0."""
    if not space.star_rule:
        raise ValueError("boundary curve requires a truncated space")
    base_pos = np.flatnonzero(space.atom_id == BASE_ATOM)
    dt = space.base_length / (len(base_pos) - 1)
    base_times = space.point_id[base_pos] * dt
    tree = (space.atom_id != BASE_ATOM) & (space.labels < eps) & (space.weights > 0)
    bpos = np.flatnonzero(tree)[::-1]
    incs = space.weights[bpos] / eps ** 2
    btimes = space.base_length + np.cumsum(incs)
    total = float(btimes[-1]) if len(btimes) else space.base_length
    return BoundaryCurveSample(
        times=np.concatenate((base_times, btimes, [total])),
        positions=np.concatenate((base_pos, bpos, [0])),
        clock=np.concatenate((np.zeros(len(base_pos), dtype=np.int8),
                              np.ones(len(bpos) + 1, dtype=np.int8))),
    )


def match_positions(space_a, space_b):
    """Pairs of exploration positions referring to the same underlying point
    (same atom and pre-truncation grid index) in two spaces built from the
    same forest."""
    key_b = {}
    for pos in range(space_b.n):
        key_b[(int(space_b.atom_id[pos]), int(space_b.point_id[pos]))] = pos
    pairs = []
    for pos in range(space_a.n):
        k = (int(space_a.atom_id[pos]), int(space_a.point_id[pos]))
        if k in key_b:
            pairs.append((pos, key_b[k]))
    return pairs


def correspondence_distortion(sample_a, sample_b, pairs):
    """Distortion of a correspondence between two metric samples:
    sup over pairs of pairs of |d_A(i,k) - d_B(j,l)|.  Pair entries index
    rows of the respective distance matrices and must cover both."""
    ia = np.array([p[0] for p in pairs])
    ib = np.array([p[1] for p in pairs])
    if set(ia.tolist()) != set(range(len(sample_a.indices))) or \
            set(ib.tolist()) != set(range(len(sample_b.indices))):
        raise ValueError("pairs must cover both index sets")
    da = sample_a.dists[np.ix_(ia, ia)]
    db = sample_b.dists[np.ix_(ib, ib)]
    both_inf = np.isinf(da) & np.isinf(db)
    diff = np.abs(da - db)
    diff[both_inf] = 0.0
    return float(diff.max())
