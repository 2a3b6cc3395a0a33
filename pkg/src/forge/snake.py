"""Grid-discretized Brownian excursions, five-dimensional Bessel bridges,
Ito-measure forests of labeled snake trees, truncation at a level, exit
measures, and excursion functionals.

Conventions.  A snake tree of duration sigma on a grid of step delta has a
contour (lifetime) path moving by +-sqrt(delta) per step and head labels
whose increments are centered Gaussians with variance equal to the lifetime
increment, pushed and popped on a stack so that the label covariance is the
minimum lifetime, exactly at grid points.  The Ito excursion measure is
normalized so that n(sup lifetime > eps) = 1/(2 eps), equivalently the tree
duration tail is n(sigma > s) = (2 pi s)^(-1/2), which gives the exact
inverse-CDF sampler sigma = s0 / U^2 for the cutoff law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels

SQRT3 = math.sqrt(3.0)


def ito_mass(s0):
    """n(sigma > s0) = (2 pi s0)^(-1/2), the total Ito mass above the
    duration cutoff."""
    if s0 <= 0:
        raise ValueError(f"need s0 > 0, got {s0}")
    return 1.0 / math.sqrt(2.0 * math.pi * s0)


def exit_window(delta, scale=1.0):
    """Default exit-measure window: scale * max(4 delta^(1/4), 8 sqrt(delta)).

    The window must vanish with the grid step but stay well above the label
    resolution delta^(1/4) per step: occupation counting near the absorbing
    level carries a boundary-layer bias ~ delta^(1/4)/eps, so the window is
    held at several label steps and always validated by a two-window
    stability gate rather than assumed."""
    return scale * max(4.0 * delta ** 0.25, 8.0 * math.sqrt(delta))


@dataclass(frozen=True)
class GridExcursion:
    """Nonnegative path on a uniform grid with zero endpoints."""

    duration: float
    values: np.ndarray
    kind: str  # "brownian_excursion" | "bessel5_bridge"

    @property
    def n(self):
        return len(self.values) - 1

    @property
    def dt(self):
        return self.duration / self.n

    def at(self, t):
        """Linear interpolation of the path at time t in [0, duration]."""
        return float(np.interp(t, np.linspace(0.0, self.duration, self.n + 1),
                               self.values))


def sample_excursion(duration, n, seed):
    """Normalized Brownian excursion of the given duration on an n-step grid,
    via the cyclic-shift (Vervaat) transform of a discrete Brownian bridge."""
    if n < 16:
        raise ValueError(f"need n >= 16, got {n}")
    gen = np.random.default_rng(seed)
    dt = duration / n
    while True:
        walk = np.empty(n + 1)
        walk[0] = 0.0
        np.cumsum(gen.standard_normal(n) * math.sqrt(dt), out=walk[1:])
        bridge = walk - np.linspace(0.0, 1.0, n + 1) * walk[n]
        j = int(np.argmin(bridge[:n]))
        exc = np.concatenate((bridge[j:n], bridge[:j + 1])) - bridge[j]
        exc[0] = 0.0
        exc[n] = 0.0
        if np.all(exc[1:n] > 0.0):
            return GridExcursion(duration, exc, "brownian_excursion")


def sample_bessel5_bridge(n, seed):
    """Five-dimensional Bessel bridge from 0 to 0 on [0, 1]: the Euclidean
    norm of five independent scalar Brownian bridges."""
    if n < 16:
        raise ValueError(f"need n >= 16, got {n}")
    gen = np.random.default_rng(seed)
    dt = 1.0 / n
    while True:
        walks = np.zeros((5, n + 1))
        np.cumsum(gen.standard_normal((5, n)) * math.sqrt(dt), axis=1,
                  out=walks[:, 1:])
        bridges = walks - np.linspace(0.0, 1.0, n + 1) * walks[:, n:]
        b = np.sqrt(np.sum(bridges ** 2, axis=0))
        b[0] = 0.0
        b[n] = 0.0
        if np.all(b[1:n] > 0.0):
            return GridExcursion(1.0, b, "bessel5_bridge")


#: Continuity-correction constant -zeta(1/2)/sqrt(2*pi) for extrema of a
#: diffusion observed on a grid of step h: the unseen sub-grid dip is
#: beta_1 * sqrt(h) in expectation.
BETA1 = 0.58259686633855


def functional_weight(base, alpha):
    """Trapezoidal evaluation of exp(-integral of (base_s + alpha)^(-2) ds)
    over the excursion's duration.

    The grid path sits lower than the continuum path it represents by the
    expected sub-grid dip beta_1 sqrt(dt) (the observed minimum of a
    diffusion on a grid undershoots the true one by that amount), so the
    path is shifted up by that correction before integrating; without it
    the estimate carries an O(n^(-1/2)) downward bias."""
    if alpha <= 0:
        raise ValueError(f"need alpha > 0, got {alpha}")
    f = (base.values + BETA1 * math.sqrt(base.dt) + alpha) ** -2.0
    integral = base.dt * (np.sum(f) - 0.5 * (f[0] + f[-1]))
    return math.exp(-integral)


@dataclass
class SnakeTree:
    """Discrete snake tree: contour lifetimes and head labels on a uniform
    grid of step delta, with the running ancestral label minimum."""

    root_time: float
    root_label: float
    sigma: float
    delta: float
    contour: np.ndarray
    head: np.ndarray
    anc_min: np.ndarray
    truncated_at: float | None = None
    orig_idx: np.ndarray | None = None  # pre-truncation grid indices

    @property
    def n_steps(self):
        return len(self.contour) - 1

    @property
    def w_min(self):
        return float(self.head.min())


def sample_tree(gen, root_time, root_label, sigma, delta, n_cap=2 ** 22):
    """One snake tree of the given duration.  Durations whose grid would
    exceed n_cap steps are simulated on a proportionally coarser per-tree
    grid, trading resolution (never law) for bounded memory."""
    n = max(2, 2 * round(sigma / (2.0 * delta)))
    if n > n_cap:
        n = n_cap
        delta = sigma / n
    contour, head, anc_min = _kernels.snake_tree_arrays(
        gen, n, root_label, delta ** 0.25, math.sqrt(delta))
    return SnakeTree(root_time, root_label, n * delta, delta,
                     contour, head, anc_min)


def sample_sigmas(gen, duration, s0):
    """Atom durations of an Ito-measure forest over a base of the given
    duration, cut off at sigma > s0: a Poisson(2 * duration * ito_mass(s0))
    count of independent tail draws s0 / U^2."""
    count = gen.poisson(2.0 * duration * ito_mass(s0))
    return s0 / gen.random(count) ** 2


@dataclass
class ForestSample:
    """Poisson forest of snake trees grafted on a scaled base excursion."""

    base: GridExcursion
    atoms: list
    cutoff_s0: float
    delta: float
    label_scale: float = SQRT3

    @property
    def total_sigma(self):
        return sum(a.sigma for a in self.atoms)


def sample_forest(base, s0, delta, seed, condition_positive=False, floor=0.0,
                  n_cap=2 ** 22):
    """Forest with intensity 2 dt N_{sqrt(3) base(t)}(dw) over the base,
    restricted to atom durations above s0.

    With condition_positive, atoms whose label minimum does not stay above
    `floor` are discarded: the indicator restriction of a Poisson intensity
    is exactly an independent thinning of its atoms."""
    if delta > s0 / 16.0:
        raise ValueError(f"need delta <= s0/16, got delta={delta}, s0={s0}")
    gen = np.random.default_rng(seed)
    sigmas = sample_sigmas(gen, base.duration, s0)
    times = np.sort(gen.random(len(sigmas))) * base.duration
    atoms = []
    for t, sig in zip(times, sigmas):
        root = SQRT3 * base.at(t)
        tree = sample_tree(gen, float(t), root, float(sig), delta, n_cap)
        if condition_positive and tree.w_min <= floor:
            continue
        atoms.append(tree)
    return ForestSample(base, atoms, s0, delta)


def truncate(tree, y):
    """Truncation tr_y: excise every subtree hanging below the first label
    crossing of y; each crossing point is retained once, with label exactly
    y.  Trees that never reach y are returned unchanged."""
    if tree.root_label <= y:
        raise ValueError(
            f"truncation level {y} must lie below the root label "
            f"{tree.root_label}")
    if tree.w_min > y:
        return tree
    n = tree.n_steps
    up = np.diff(tree.contour) > 0
    head = tree.head
    keep = np.ones(n + 1, dtype=bool)
    new_head = head.copy()
    new_min = tree.anc_min.copy()
    depth = 0
    cross_depth = -1
    for k in range(n):
        if up[k]:
            depth += 1
            if cross_depth < 0:
                if head[k + 1] <= y:
                    cross_depth = depth
                    keep[k + 1] = False
            else:
                keep[k + 1] = False
        else:
            depth -= 1
            if cross_depth >= 0:
                if cross_depth == depth + 1:
                    # back at the crossing point: retain it with label y
                    cross_depth = -1
                    new_head[k + 1] = y
                    new_min[k + 1] = y
                else:
                    keep[k + 1] = False
    return SnakeTree(tree.root_time, tree.root_label,
                     tree.delta * (int(keep.sum()) - 1), tree.delta,
                     tree.contour[keep], new_head[keep], new_min[keep],
                     truncated_at=y, orig_idx=np.nonzero(keep)[0])


def exit_measure(tree, y, eps):
    """Grid exit measure at level y: (delta / eps^2) times the number of
    grid points of tr_y(tree) with label below y + eps."""
    if eps <= 0:
        raise ValueError(f"need eps > 0, got {eps}")
    tr = tree if tree.truncated_at == y else truncate(tree, y)
    count = int(np.count_nonzero(tr.head < y + eps)) - (1 if tr.head[0] < y + eps else 0)
    return tree.delta / eps ** 2 * count


def excursions_below(tree, y, eps=None):
    """Excursions of the snake below level y, each tagged with the exit
    local time accumulated at its start and label-shifted to start at y."""
    if eps is None:
        eps = exit_window(tree.delta)
    n = tree.n_steps
    up = np.diff(tree.contour) > 0
    head = tree.head
    contour = tree.contour
    out = []
    depth = 0
    cross_depth = -1
    start = -1
    clock = 0
    thr = y + eps
    for k in range(n):
        if up[k]:
            depth += 1
            if cross_depth < 0 and head[k + 1] <= y:
                cross_depth = depth
                start = k + 1
        else:
            depth -= 1
            if cross_depth == depth + 1:
                shift = y - head[start]
                sub_con = contour[start:k + 1] - contour[start]
                sub_head = head[start:k + 1] + shift
                sub_min = np.minimum.accumulate(sub_head)
                out.append((tree.delta / eps ** 2 * clock, SnakeTree(
                    tree.root_time, y, tree.delta * (len(sub_con) - 1),
                    tree.delta, sub_con, sub_head, sub_min)))
                cross_depth = -1
                continue
        if cross_depth < 0 and k + 1 <= n and head[k + 1] < thr:
            clock += 1
    return out


def laplace_exit(x, y, lam):
    """Closed form N_x(1 - exp(-lam Z_y)) = ((x - y) sqrt(2/3)
    + lam^(-1/2))^(-2) for x > y, lam > 0."""
    if x <= y or lam <= 0:
        raise ValueError(f"need x > y and lam > 0, got x={x}, y={y}, lam={lam}")
    return ((x - y) * math.sqrt(2.0 / 3.0) + lam ** -0.5) ** -2.0


def hitting_mass(x, y):
    """Closed form N_x(W_* <= y) = 3 / (2 (x - y)^2) for y < x."""
    if x <= y:
        raise ValueError(f"need x > y, got x={x}, y={y}")
    return 1.5 / (x - y) ** 2


def overshoot_factor(delta, eps):
    """Expected relative overcount of window occupation on a grid tree.

    The label walk along a branch is absorbed on its first step past the
    level, i.e. at an overshoot of expected size beta_1 delta^(1/4) below
    it; the killed walk's occupation of a window of width eps above the
    level therefore exceeds the continuum value by the factor
    1 + 2 beta_1 delta^(1/4) / eps, the Green-function shift of a random
    walk with Gaussian steps of standard deviation delta^(1/4)."""
    return 1.0 + 2.0 * BETA1 * delta ** 0.25 / eps


def ito_tree_stats(root_label, y, s0, delta, n_trees, seed, eps=None,
                   lam=1.0, n_cap=2 ** 22):
    """Monte Carlo estimates of the hitting mass N_x(W_* <= y) and the exit
    Laplace functional N_x(1 - e^(-lam Z_y)) by direct tree sampling above
    the duration cutoff s0.

    The exit mass per tree is the window count scaled by delta/eps^2,
    divided by the overshoot factor, and taken only on trees whose label
    minimum reaches y (the exit measure vanishes on the others; keeping
    their near-miss window occupation would add a bias that does not vanish
    with the grid step).  Returns a dict with the two estimates, standard
    errors, and the same Laplace estimate at half the exit window (the
    stability gate)."""
    if eps is None:
        eps = exit_window(delta)
    mass = ito_mass(s0)
    gen = np.random.default_rng(seed)
    hit = np.empty(n_trees)
    lap1 = np.empty(n_trees)
    lap2 = np.empty(n_trees)
    for i in range(n_trees):
        sigma = s0 / gen.random() ** 2
        n = max(2, 2 * round(sigma / (2.0 * delta)))
        d = delta
        if n > n_cap:
            n = n_cap
            d = sigma / n
        _, w_min, _, cnt1, cnt2 = _kernels.snake_tree_stats(
            gen, n, root_label, d ** 0.25, -math.inf, y, eps, 0.5 * eps)
        if w_min <= y:
            hit[i] = 1.0
            z1 = d / eps ** 2 * cnt1 / overshoot_factor(d, eps)
            z2 = d / (0.5 * eps) ** 2 * cnt2 / overshoot_factor(d, 0.5 * eps)
            lap1[i] = -math.expm1(-lam * z1)
            lap2[i] = -math.expm1(-lam * z2)
        else:
            hit[i] = lap1[i] = lap2[i] = 0.0
    scale = mass / math.sqrt(n_trees)
    return {
        "hit": mass * hit.mean(),
        "hit_se": scale * hit.std(),
        "laplace": mass * lap1.mean(),
        "laplace_se": scale * lap1.std(),
        "laplace_half_eps": mass * lap2.mean(),
        "eps": eps,
    }


def _extrapolate_inverse_sq(deltas, values, errors):
    """Weighted linear fit of value^(-1/2) against delta^(1/4), returning the
    zero-grid limit and its standard error.

    Both tree-level targets are inverse squares of an effective distance, and
    the dominant grid bias is an additive distance shift of order delta^(1/4)
    (the discrete tree misses label dips below one grid step), so the
    transform value^(-1/2) is asymptotically linear in delta^(1/4)."""
    x = np.asarray(deltas, dtype=np.float64) ** 0.25
    v = np.asarray(values, dtype=np.float64)
    e = np.asarray(errors, dtype=np.float64)
    y = v ** -0.5
    sy = e / (2.0 * v ** 1.5)
    w = sy ** -2.0
    sw, sx, sxx = w.sum(), (w * x).sum(), (w * x * x).sum()
    det = sw * sxx - sx * sx
    y0 = (sxx * (w * y).sum() - sx * (w * x * y).sum()) / det
    var_y0 = sxx / det
    limit = y0 ** -2.0
    return limit, 2.0 * limit ** 1.5 * math.sqrt(var_y0)


def ito_ladder_estimates(root_label, y, s0, deltas, n_trees, seed, eps=None,
                         lam=1.0, n_cap=2 ** 22):
    """Grid-ladder estimates of the hitting mass and the exit Laplace
    functional, extrapolated to the zero-grid limit.

    Runs ito_tree_stats on each grid step of `deltas`; with eps=None each
    grid uses its own default window ~ delta^(1/4), so the finite-window
    occupation bias shrinks with the grid step and is removed by the same
    inverse-square extrapolation as the label-resolution distance shift.
    Returns a dict with the extrapolated values, standard errors, the
    Laplace limit at half the window (stability gate), and the raw
    per-grid estimates."""
    rows = []
    for d, n, ss in zip(deltas, n_trees,
                        np.random.SeedSequence(seed).spawn(len(deltas))):
        rows.append(ito_tree_stats(root_label, y, s0, d, n, ss, eps=eps,
                                   lam=lam, n_cap=n_cap))
    hit, hit_se = _extrapolate_inverse_sq(
        deltas, [r["hit"] for r in rows], [r["hit_se"] for r in rows])
    lap, lap_se = _extrapolate_inverse_sq(
        deltas, [r["laplace"] for r in rows], [r["laplace_se"] for r in rows])
    lap_half, _ = _extrapolate_inverse_sq(
        deltas, [r["laplace_half_eps"] for r in rows],
        [r["laplace_se"] for r in rows])
    return {
        "hit": hit, "hit_se": hit_se,
        "laplace": lap, "laplace_se": lap_se,
        "laplace_half_eps": lap_half,
        "grids": rows,
    }


def forest_exit_total(base, s0, delta, gen, eps, n_cap=2 ** 22):
    """Total exit measure at level 0 of a forest over the base, without
    materializing the trees: sum of per-atom grid exit measures, each gated
    on the atom actually reaching the level and divided by the overshoot
    factor (see ito_tree_stats)."""
    sigmas = sample_sigmas(gen, base.duration, s0)
    roots = SQRT3 * np.interp(
        np.sort(gen.random(len(sigmas))) * base.duration,
        np.linspace(0.0, base.duration, base.n + 1), base.values)
    total = 0.0
    for root, sigma in zip(roots, sigmas):
        if root <= 0.0:
            continue
        n = max(2, 2 * round(sigma / (2.0 * delta)))
        d = delta
        if n > n_cap:
            n = n_cap
            d = sigma / n
        _, w_min, _, cnt, _ = _kernels.snake_tree_stats(
            gen, n, float(root), d ** 0.25, -math.inf, 0.0, eps, eps)
        if w_min <= 0.0:
            total += d / eps ** 2 * cnt / overshoot_factor(d, eps)
    return total


def sample_zu(duration, n_base, s0, delta, n_forests, seed, eps=None,
              n_cap=2 ** 22):
    """Independent samples of the total exit measure Z over fresh base
    excursions; the target law at duration 1 has density
    (3/2) (1 + z)^(-5/2)."""
    if eps is None:
        eps = exit_window(delta)
    out = np.empty(n_forests)
    for i, ss in enumerate(np.random.SeedSequence(seed).spawn(n_forests)):
        gen = np.random.default_rng(ss)
        base = sample_excursion(duration, n_base, gen)
        out[i] = forest_exit_total(base, s0, delta, gen, eps, n_cap)
    return out
