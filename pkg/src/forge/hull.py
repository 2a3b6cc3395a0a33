"""Hull laboratory: the special functions Phi and chi1, excursion
reweighting toward the Bessel-type excursion above a level, the pointed unit
disk built from a five-dimensional Bessel bridge with a positively
conditioned forest, and the hull/complement decomposition at radius r with
perimeters P0 (base excursion interval) and P1 (exit measures of straddled
atoms).

Conditioned forests are sampled by thinning: an intensity restricted by an
indicator is exactly the independent thinning of the unrestricted Poisson
atoms, so atoms whose label minimum violates the condition are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, gammaincc

from . import _kernels, snake
from .snake import (GridExcursion, ForestSample, SQRT3, exit_window,
                    functional_weight, ito_mass, sample_bessel5_bridge,
                    sample_excursion, sample_forest, sample_sigmas)

SQRT_PI = math.sqrt(math.pi)


def phi_fn(u):
    """Phi(u) = 1 - 2u + 2 sqrt(pi) u^(3/2) e^u erfc(sqrt(u)), the Laplace
    normalization of the excursion-above-level change of measure;
    overflow-safe via the scaled complementary error function."""
    if u < 0:
        raise ValueError(f"need u >= 0, got {u}")
    return 1.0 - 2.0 * u + 2.0 * SQRT_PI * u ** 1.5 * float(erfcx(math.sqrt(u)))


def chi1(x):
    """chi1(x) = (pi x)^(-1/2) - e^x erfc(sqrt(x)), overflow-safe."""
    if x <= 0:
        raise ValueError(f"need x > 0, got {x}")
    return 1.0 / (SQRT_PI * math.sqrt(x)) - float(erfcx(math.sqrt(x)))


def laplace_zu_closed(lam):
    """Closed form E[exp(-lam Z)] = 1 - 2 sqrt(pi) lam^(3/2) chi1(lam) for
    the total exit measure over a unit-duration base."""
    return 1.0 - 2.0 * SQRT_PI * lam ** 1.5 * chi1(lam)


def laplace_zu_conditional(base, lam):
    """Conditional Laplace transform E[exp(-lam Z) | base] =
    exp(-int (base + (2 lam)^(-1/2))^(-2))."""
    if lam <= 0:
        raise ValueError(f"need lam > 0, got {lam}")
    return functional_weight(base, (2.0 * lam) ** -0.5)


def density_tilde_z(z, xi, r):
    """Density of the conditioned total exit measure:
    (3/2) Phi(3 xi/(2 r^2))^(-1) xi^(3/2) (xi+z)^(-5/2) exp(-3z/(2 r^2))."""
    if xi <= 0 or r <= 0:
        raise ValueError(f"need xi > 0 and r > 0, got xi={xi}, r={r}")
    z = np.asarray(z, dtype=np.float64)
    if np.any(z < 0):
        raise ValueError("supported on [0, infinity)")
    return (1.5 / phi_fn(1.5 * xi / r ** 2) * xi ** 1.5
            * (xi + z) ** -2.5 * np.exp(-1.5 * z / r ** 2))


def reweight_excursions(samples, r):
    """Importance weights turning plain excursions into the excursion above
    level -r: weight = exp(-int (e+r)^(-2)) / Phi(xi/(2r^2)); the weights
    have unit mean."""
    if not samples:
        return []
    xi = samples[0].duration
    norm = phi_fn(xi / (2.0 * r ** 2))
    return [(e, functional_weight(e, r) / norm) for e in samples]


def sample_excursion_above(duration, n, r, gen):
    """Excursion reweighted by exp(-int (e+r)^(-2)), drawn by exact
    rejection; acceptance probability is the integrand, with overall
    acceptance rate Phi(duration/(2 r^2))."""
    while True:
        e = sample_excursion(duration, n, gen)
        if gen.random() < functional_weight(e, r):
            return e


def volume_cdf(v):
    """CDF of the unit-perimeter free disk volume with density
    (2 pi v^5)^(-1/2) exp(-1/(2v)): the regularized upper incomplete gamma
    Q(3/2, 1/(2v))."""
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0):
        raise ValueError("supported on [0, infinity)")
    return gammaincc(1.5, 1.0 / (2.0 * np.maximum(v, 1e-300)))


@dataclass
class DiskPrime:
    """Pointed unit-perimeter disk data: sqrt(3)-labeled Bessel-5 bridge
    base with a forest conditioned to keep all labels positive."""

    base: GridExcursion
    forest: ForestSample

    @property
    def total_volume(self):
        return self.forest.total_sigma


def sample_disk_prime(n, delta, s0, seed, n_cap=2 ** 22):
    gen = np.random.default_rng(seed)
    base = sample_bessel5_bridge(n, gen)
    forest = sample_forest(base, s0, delta, gen, condition_positive=True,
                           floor=0.0, n_cap=n_cap)
    return DiskPrime(base, forest)


def _excursion_interval(values, duration, alpha, level):
    """Grid excursion interval of the base above `level` straddling alpha:
    (T_minus, T_plus) by linear interpolation of the crossings."""
    n = len(values) - 1
    dt = duration / n
    ia = int(round(alpha / dt))
    below = values <= level
    i = ia
    while not below[i]:
        i -= 1
    t_minus = (i + (level - values[i]) / (values[i + 1] - values[i])) * dt
    j = ia
    while not below[j]:
        j += 1
    t_plus = (j - 1 + (level - values[j - 1]) / (values[j] - values[j - 1])) * dt
    return t_minus, t_plus, i + 1, j - 1


@dataclass
class HullDecomposition:
    t_minus: float
    t_plus: float
    p0: float
    p1: float
    hull_volume: float
    complement_volume: float
    total_volume: float
    diamond_base: np.ndarray  # base values minus r/sqrt(3) on [T-, T+] grid
    diamond_atoms: list  # straddled atoms truncated at r, labels shifted by -r
    outside_atoms: list  # flank atoms, untouched
    below_excursions: list  # (local_time, sub) pairs from straddled atoms


def hull_decompose(disk, alpha, r, eps=None):
    """Decomposition of the pointed disk at radius r around the boundary:
    the hull of the point Pi'(alpha) and its complement, a free disk of
    perimeter P0 + P1.  Returns None when sqrt(3) base(alpha) <= r (the
    conditioning event fails)."""
    if not 0.0 < alpha < 1.0 or r <= 0:
        raise ValueError(f"need alpha in (0,1) and r > 0, got {alpha}, {r}")
    base = disk.base
    if SQRT3 * base.at(alpha) <= r:
        return None
    if eps is None:
        eps = exit_window(disk.forest.delta)
    level = r / SQRT3
    t_minus, t_plus, gi, gj = _excursion_interval(
        base.values, base.duration, alpha, level)
    diamond_base = base.values[gi:gj + 1] - level
    diamond_atoms, outside_atoms, below = [], [], []
    p1 = compl = 0.0
    for a in disk.forest.atoms:
        if t_minus < a.root_time < t_plus:
            tr = snake.truncate(a, r) if a.w_min <= r else a
            p1 += snake.exit_measure(a, r, eps)
            compl += tr.sigma
            shifted = snake.SnakeTree(
                a.root_time - t_minus, tr.root_label - r, tr.sigma, tr.delta,
                tr.contour, tr.head - r, tr.anc_min - r,
                truncated_at=0.0 if tr.truncated_at is not None else None,
                orig_idx=tr.orig_idx)
            diamond_atoms.append(shifted)
            below.extend(snake.excursions_below(a, r, eps))
        else:
            outside_atoms.append(a)
    total = disk.total_volume
    return HullDecomposition(
        t_minus=t_minus, t_plus=t_plus, p0=t_plus - t_minus, p1=p1,
        hull_volume=total - compl, complement_volume=compl,
        total_volume=total, diamond_base=diamond_base,
        diamond_atoms=diamond_atoms, outside_atoms=outside_atoms,
        below_excursions=below)


def hull_statistics(n_disks, alpha, r, s0, delta, seed, eps=None,
                    n_base=2 ** 11, n_cap=2 ** 22):
    """Per-replica hull summaries without materializing trees: each atom is
    resolved in one streaming kernel pass (thinning on label minimum > 0,
    exit-measure count and truncated duration at level r).

    Returns a dict of aligned arrays: applicable, t_minus, t_plus, p0, p1,
    hull_volume, complement_volume, total_volume."""
    if eps is None:
        eps = exit_window(delta)
    level = r / SQRT3
    out = {k: np.zeros(n_disks) for k in
           ("t_minus", "t_plus", "p0", "p1", "hull_volume",
            "complement_volume", "total_volume")}
    applicable = np.zeros(n_disks, dtype=bool)
    for k, ss in enumerate(np.random.SeedSequence(seed).spawn(n_disks)):
        gen = np.random.default_rng(ss)
        base = sample_bessel5_bridge(n_base, gen)
        sigmas = sample_sigmas(gen, 1.0, s0)
        times = np.sort(gen.random(len(sigmas)))
        roots = SQRT3 * np.interp(times, np.linspace(0.0, 1.0, n_base + 1),
                                  base.values)
        ok_alpha = SQRT3 * base.at(alpha) > r
        if ok_alpha:
            t_minus, t_plus, _, _ = _excursion_interval(
                base.values, 1.0, alpha, level)
        total = p1 = compl = 0.0
        for t, sig, root in zip(times, sigmas, roots):
            if root <= 0.0:
                continue
            n = max(2, 2 * round(sig / (2.0 * delta)))
            d = delta
            if n > n_cap:
                n = n_cap
                d = sig / n
            kept, w_min, alive, cnt, _ = _kernels.snake_tree_stats(
                gen, n, float(root), d ** 0.25, 0.0, r, eps, eps)
            if not kept:
                continue
            total += n * d
            if ok_alpha and t_minus < t < t_plus:
                if w_min <= r:
                    p1 += cnt * d / eps ** 2 / snake.overshoot_factor(d, eps)
                compl += alive * d
        if not ok_alpha:
            continue
        applicable[k] = True
        out["t_minus"][k] = t_minus
        out["t_plus"][k] = t_plus
        out["p0"][k] = t_plus - t_minus
        out["p1"][k] = p1
        out["total_volume"][k] = total
        out["complement_volume"][k] = compl
        out["hull_volume"][k] = total - compl
    out["applicable"] = applicable
    return out


def sample_ztilde(n_samples, r, s0, delta, seed, n_base=2 ** 11,
                  n_cap=2 ** 22, eps=None):
    """Direct draws from the conditioned pair: base excursion above level
    (exact rejection), forest thinned to atoms staying above -r, total exit
    measure at 0.  Returns (z_tilde, base_max) arrays."""
    r_prime = r / SQRT3
    if eps is None:
        eps = exit_window(delta)
    floor = -r
    zt = np.empty(n_samples)
    emax = np.empty(n_samples)
    for k, ss in enumerate(np.random.SeedSequence(seed).spawn(n_samples)):
        gen = np.random.default_rng(ss)
        base = sample_excursion_above(1.0, n_base, r_prime, gen)
        zt[k] = _forest_exit_floor(base, s0, delta, gen, eps, floor, n_cap)
        emax[k] = base.values.max()
    return zt, emax


def sample_z_tilted(n_samples, r, s0, delta, seed, n_base=2 ** 11,
                    n_cap=2 ** 22, eps=None):
    """Draws from the exponentially tilted unconditioned pair: plain
    excursion and forest, accepted with probability exp(-3 Z/(2 r^2)).
    By the reweighting identity this matches the law of (base, forest)
    conditioned as in sample_ztilde.  Returns (z, base_max) arrays."""
    zt = np.empty(n_samples)
    emax = np.empty(n_samples)
    tilt = 1.5 / r ** 2
    if eps is None:
        eps = exit_window(delta)
    k = 0
    ss = np.random.SeedSequence(seed)
    while k < n_samples:
        gen = np.random.default_rng(ss.spawn(1)[0])
        base = sample_excursion(1.0, n_base, gen)
        z = _forest_exit_floor(base, s0, delta, gen, eps, -math.inf, n_cap)
        if gen.random() < math.exp(-tilt * z):
            zt[k] = z
            emax[k] = base.values.max()
            k += 1
    return zt, emax


def _forest_exit_floor(base, s0, delta, gen, eps, floor, n_cap):
    """Total exit measure at 0 of a forest over the base, thinned to atoms
    whose label minimum stays above `floor`; per-atom masses are gated on
    the atom reaching 0 and corrected for the absorption overshoot (see
    snake.forest_exit_total)."""
    sigmas = sample_sigmas(gen, base.duration, s0)
    roots = SQRT3 * np.interp(
        np.sort(gen.random(len(sigmas))) * base.duration,
        np.linspace(0.0, base.duration, base.n + 1), base.values)
    total = 0.0
    for root, sig in zip(roots, sigmas):
        if root <= 0.0:
            continue
        n = max(2, 2 * round(sig / (2.0 * delta)))
        d = delta
        if n > n_cap:
            n = n_cap
            d = sig / n
        kept, w_min, _, cnt, _ = _kernels.snake_tree_stats(
            gen, n, float(root), d ** 0.25, floor, 0.0, eps, eps)
        if kept and w_min <= 0.0:
            total += cnt * d / eps ** 2 / snake.overshoot_factor(d, eps)
    return total


def importance_ztilde_laplace(n_samples, r, s0, delta, seed, n_base=2 ** 11,
                              n_cap=2 ** 22, eps=None):
    """Self-normalized importance estimate of E[exp(-Z_tilde)] from plain
    unconditioned base excursions, reweighted toward the excursion above
    -r' by w = functional_weight(base, r'), each carrying a floor-thinned
    forest exit measure.  Returns (estimate, standard error, raw z samples).

    The forest operator is identical to the direct conditioned sampler's,
    so the two estimates target the same quantity at every grid step and
    differ only by Monte Carlo noise."""
    z = np.empty(n_samples)
    w = np.empty(n_samples)
    r_prime = r / SQRT3
    if eps is None:
        eps = exit_window(delta)
    for k, ss in enumerate(np.random.SeedSequence(seed).spawn(n_samples)):
        gen = np.random.default_rng(ss)
        base = sample_excursion(1.0, n_base, gen)
        w[k] = functional_weight(base, r_prime)
        z[k] = _forest_exit_floor(base, s0, delta, gen, eps, -r, n_cap)
    f = np.exp(-z)
    est = float((f * w).sum() / w.sum())
    resid = w * (f - est)
    se = math.sqrt(float((resid ** 2).sum())) / float(w.sum())
    return est, se, z
