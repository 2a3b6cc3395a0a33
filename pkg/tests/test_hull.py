"""Hull laboratory: special functions, reweighting identities, pointed
disks, and the hull/complement decomposition."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from forge import hull, snake
from forge.hull import (DiskPrime, chi1, density_tilde_z, hull_decompose,
                        hull_statistics, laplace_zu_closed,
                        laplace_zu_conditional, phi_fn, reweight_excursions,
                        sample_disk_prime, sample_excursion_above, volume_cdf)


class TestSpecialFunctions:
    def test_chi1_against_plain_erfc(self):
        # independent evaluation through math.erfc instead of scipy's erfcx
        for x in (0.05, 0.5, 1.0, 3.0):
            ref = 1.0 / math.sqrt(math.pi * x) - math.exp(x) * math.erfc(
                math.sqrt(x))
            assert chi1(x) == pytest.approx(ref, rel=1e-12)

    def test_chi1_large_argument_asymptotics(self):
        # chi1(x) ~ 1/(2 sqrt(pi) x^(3/2)) as x -> infinity
        for x in (1e4, 1e6):
            assert chi1(x) == pytest.approx(
                0.5 / math.sqrt(math.pi) / x ** 1.5, rel=1e-2)

    def test_phi_against_plain_erfc(self):
        for u in (0.05, 0.5, 2.0):
            ref = (1.0 - 2.0 * u + 2.0 * math.sqrt(math.pi) * u ** 1.5
                   * math.exp(u) * math.erfc(math.sqrt(u)))
            assert phi_fn(u) == pytest.approx(ref, rel=1e-12)

    def test_phi_limits_and_identity(self):
        assert phi_fn(0.0) == 1.0
        assert 0.0 < phi_fn(50.0) < phi_fn(1.0) < 1.0
        for u in (0.01, 0.3, 2.0, 20.0):
            assert phi_fn(u) == pytest.approx(laplace_zu_closed(u), abs=1e-13)

    def test_laplace_zu_closed_is_a_laplace_transform(self):
        # matches the quadrature of the density (3/2)(1+z)^(-5/2)
        for lam in (0.2, 1.0, 4.0):
            ref, _ = quad(lambda z: 1.5 * (1 + z) ** -2.5 * math.exp(-lam * z),
                          0.0, np.inf)
            assert laplace_zu_closed(lam) == pytest.approx(ref, rel=1e-8)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            chi1(0.0)
        with pytest.raises(ValueError):
            phi_fn(-0.1)


class TestDensitiesAndCdfs:
    def test_density_tilde_z_normalized(self):
        for xi, r in ((1.0, 0.5), (0.3, 1.2)):
            total, _ = quad(lambda z: float(density_tilde_z(z, xi, r)),
                            0.0, np.inf)
            assert total == pytest.approx(1.0, rel=1e-7)

    def test_density_tilde_z_reduces_to_free_law(self):
        # r -> infinity removes the tilt: density -> (3/2) xi^(3/2) (xi+z)^(-5/2)
        z = np.array([0.0, 0.5, 2.0])
        d = density_tilde_z(z, 1.0, 1e6)
        assert np.allclose(d, 1.5 * (1.0 + z) ** -2.5, rtol=1e-5)

    def test_volume_cdf_matches_density(self):
        for v in (0.2, 1.0, 5.0):
            ref, _ = quad(lambda t: (2 * math.pi * t ** 5) ** -0.5
                          * math.exp(-0.5 / t), 0.0, v)
            assert float(volume_cdf(v)) == pytest.approx(ref, rel=1e-8)
        assert float(volume_cdf(0.0)) == 0.0


class TestReweighting:
    def test_weights_have_unit_mean(self):
        gen = np.random.default_rng(20)
        samples = [snake.sample_excursion(1.0, 512, gen) for _ in range(4000)]
        pairs = reweight_excursions(samples, r=1.0)
        w = np.array([wt for _, wt in pairs])
        se = w.std() / math.sqrt(len(w))
        assert abs(w.mean() - 1.0) < 4 * se + 1e-3

    def test_rejection_sampler_acceptance_rate(self):
        # overall acceptance probability is Phi(xi / (2 r^2))
        gen = np.random.default_rng(21)
        r = 1.0
        target = phi_fn(0.5)
        n_accept = 200
        n_draws = 0
        for _ in range(n_accept):
            while True:
                n_draws += 1
                e = snake.sample_excursion(1.0, 256, gen)
                if gen.random() < snake.functional_weight(e, r):
                    break
        rate = n_accept / n_draws
        assert abs(rate - target) < 0.08

    def test_sample_excursion_above_stays_positive(self):
        gen = np.random.default_rng(22)
        e = sample_excursion_above(1.0, 256, 0.5, gen)
        assert np.all(e.values[1:-1] > 0)


@pytest.fixture(scope="module")
def disk():
    return sample_disk_prime(256, 2e-4, 8e-3, seed=23)


class TestDiskAndHull:
    def test_disk_conditioning(self, disk):
        assert all(a.w_min > 0.0 for a in disk.forest.atoms)
        assert disk.total_volume == pytest.approx(
            sum(a.sigma for a in disk.forest.atoms))

    def test_decomposition_conserves_volume(self, disk):
        r = 0.1
        dec = hull_decompose(disk, 0.5, r)
        if dec is None:
            pytest.skip("conditioning event failed for this seed")
        assert dec.hull_volume + dec.complement_volume == pytest.approx(
            dec.total_volume)
        assert dec.t_minus < 0.5 < dec.t_plus
        assert dec.p0 == pytest.approx(dec.t_plus - dec.t_minus)
        assert dec.p1 >= 0.0
        # straddled atoms were shifted down by r and truncated at 0
        for a in dec.diamond_atoms:
            assert a.truncated_at in (None, 0.0)
        assert np.all(dec.diamond_base >= 0.0)

    def test_not_applicable_when_base_below_level(self, disk):
        big_r = math.sqrt(3.0) * disk.base.at(0.5) + 1.0
        assert hull_decompose(disk, 0.5, big_r) is None

    def test_hull_statistics_shapes_and_conservation(self):
        st = hull_statistics(6, alpha=0.5, r=0.3, s0=8e-3, delta=2e-4,
                             seed=24, n_base=256)
        m = st["applicable"]
        assert m.dtype == bool and len(m) == 6
        assert np.allclose(st["hull_volume"][m] + st["complement_volume"][m],
                           st["total_volume"][m])
        assert np.all(st["p0"][m] > 0)
        assert np.all(st["p1"][m] >= 0)

    def test_invalid_arguments(self, disk):
        with pytest.raises(ValueError):
            hull_decompose(disk, 1.5, 0.1)
        with pytest.raises(ValueError):
            hull_decompose(disk, 0.5, -1.0)


class TestConditionalLaplace:
    def test_conditional_matches_closed_form_in_mean(self):
        # E over bases of exp(-int (e + (2 lam)^(-1/2))^(-2)) = E[e^(-lam Z)]
        gen = np.random.default_rng(25)
        lam = 1.0
        vals = [laplace_zu_conditional(snake.sample_excursion(1.0, 512, gen),
                                       lam) for _ in range(4000)]
        se = np.std(vals) / math.sqrt(len(vals))
        assert abs(np.mean(vals) - laplace_zu_closed(lam)) < 4 * se + 1e-3

    def test_lam_positive_required(self):
        e = snake.sample_excursion(1.0, 64, seed=1)
        with pytest.raises(ValueError):
            laplace_zu_conditional(e, 0.0)
