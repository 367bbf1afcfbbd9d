import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from betalog.ensembles import Domain, EnsembleSpec
from betalog.kstest import half_normal_cdf, ks_1samp, ks_2samp
from betalog.partition import centering_constant
from betalog.sampler import (
    Configuration,
    DegenerateConfigurationError,
    EigenConvergenceError,
    McmcParams,
    RngSeed,
    chi_sample,
    eigen_tridiag,
    mcmc_chain,
    sample_hermite_tridiag,
    sample_hermite_tridiag_batch,
    sample_mcmc,
    tridiag_scale,
)
from betalog.statistic import potential_energy

from conftest import hermite_rejection, mean_and_se


class TestConfiguration:
    def test_sorted_required(self):
        with pytest.raises(DegenerateConfigurationError):
            Configuration(np.array([1.0, 0.0]), Domain.REAL_LINE)
        with pytest.raises(DegenerateConfigurationError):
            Configuration(np.array([0.0, 0.0]), Domain.REAL_LINE)

    def test_domains(self):
        with pytest.raises(DegenerateConfigurationError):
            Configuration(np.array([0.0, 7.0]), Domain.CIRCLE)
        with pytest.raises(DegenerateConfigurationError):
            Configuration(np.array([0.0, 1.0]), Domain.HALF_LINE)
        with pytest.raises(DegenerateConfigurationError):
            Configuration(np.array([-1.0, 0.5]), Domain.INTERVAL)
        Configuration(np.array([-0.5, 0.5]), Domain.INTERVAL)

    def test_from_unsorted(self):
        c = Configuration.from_unsorted([3.0, -1.0, 2.0], Domain.REAL_LINE)
        np.testing.assert_array_equal(c.values, [-1.0, 2.0, 3.0])
        c = Configuration.from_unsorted([-0.1, 7.0], Domain.CIRCLE)
        assert np.all((c.values >= 0) & (c.values < 2 * math.pi))

    def test_immutable_and_csv(self):
        c = Configuration(np.array([0.25, 1.5]), Domain.REAL_LINE)
        with pytest.raises(ValueError):
            c.values[0] = 3.0
        assert c.to_csv_row() == "0.25,1.5"


class TestRng:
    def test_reproducible(self):
        a = RngSeed(7, 3).generator().random(5)
        b = RngSeed(7, 3).generator().random(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = RngSeed(7, 3).generator().random(5)
        b = RngSeed(7, 4).generator().random(5)
        c = RngSeed(7, 3, tag=10).generator().random(5)
        assert not np.array_equal(a, b) and not np.array_equal(a, c)

    def test_range(self):
        RngSeed(2**64 - 1, 2**64 - 1)
        with pytest.raises(ValueError):
            RngSeed(-1)
        with pytest.raises(ValueError):
            RngSeed(0, 2**64)


class TestParams:
    def test_defaults(self):
        p = McmcParams()
        assert p.thinning == 10 and p.target_acceptance == 0.44
        assert p.burn_in_sweeps(20) == 100
        assert p.burn_in_sweeps(200) == 400
        assert McmcParams(burn_in=7).burn_in_sweeps(200) == 7

    @pytest.mark.parametrize(
        "kwargs",
        [{"burn_in": -1}, {"thinning": 0}, {"step_scale": 0.0}, {"target_acceptance": 1.0}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            McmcParams(**kwargs)


class TestEigenTridiag:
    def test_one_by_one(self):
        np.testing.assert_array_equal(eigen_tridiag([2.5], []), [2.5])

    def test_two_by_two(self):
        np.testing.assert_allclose(eigen_tridiag([0.0, 0.0], [-3.0]), [-3.0, 3.0], atol=1e-15)

    @pytest.mark.parametrize("n", [5, 20, 60])
    def test_hermite_zeros(self, n):
        off = np.sqrt(np.arange(1, n) / 2.0)
        x = eigen_tridiag(np.zeros(n), off)
        assert abs(x.sum()) < 1e-10
        np.testing.assert_allclose(x, -x[::-1], atol=1e-11)
        # three-term recurrence for physicists' H_n, normalised by its size scale
        h_prev, h = np.ones_like(x), 2 * x
        for k in range(1, n):
            h_prev, h = h, 2 * x * h - 2 * k * h_prev
        deriv_scale = np.abs(2 * n * h_prev)
        assert np.max(np.abs(h) / deriv_scale) < 1e-6

    def test_against_numpy(self, rng):
        for n in (3, 17, 120):
            d = rng.normal(size=n)
            e = rng.normal(size=n - 1)
            full = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
            ref = np.linalg.eigvalsh(full)
            got = eigen_tridiag(d, e)
            norm = np.linalg.norm(full, 2)
            assert np.max(np.abs(got - ref)) < 1e-12 * norm * 10

    def test_graded_matrix(self):
        n = 40
        d = 10.0 ** -np.arange(n, dtype=float)
        e = 10.0 ** -(np.arange(n - 1, dtype=float) + 0.5)
        full = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        np.testing.assert_allclose(eigen_tridiag(d, e), np.linalg.eigvalsh(full), atol=1e-14)

    def test_iteration_cap_raises(self):
        with pytest.raises(EigenConvergenceError):
            eigen_tridiag([1.0, 2.0, 3.0], [1.0, 1.0], max_iter=0)

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            eigen_tridiag([1.0, 2.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            eigen_tridiag([], [])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=25), st.data())
    def test_property_trace_and_order(self, diag, data):
        off = data.draw(st.lists(st.floats(-1e3, 1e3), min_size=len(diag) - 1, max_size=len(diag) - 1))
        x = eigen_tridiag(diag, off)
        assert np.all(np.diff(x) >= 0)
        scale = max(1.0, np.abs(diag).max(), np.abs(off).max() if off else 0.0)
        assert abs(x.sum() - sum(diag)) < 1e-10 * scale * len(diag)


class TestChi:
    def test_second_moments(self):
        rng = np.random.default_rng(1)
        for k in (2.0, 0.5):
            x2 = chi_sample(k, rng, size=10**6) ** 2
            m, se = mean_and_se(x2)
            assert abs(m - k) < 3 * se

    def test_k_one_half_normal(self):
        rng = np.random.default_rng(2)
        _, p = ks_1samp(chi_sample(1.0, rng, size=5000), half_normal_cdf)
        assert p > 0.01

    def test_positive_and_domain(self):
        rng = np.random.default_rng(3)
        assert np.all(chi_sample(np.array([0.1, 3.0, 40.0]), rng) > 0)
        with pytest.raises(ValueError):
            chi_sample(0.0, rng)


class TestTridiagSampler:
    def test_single_particle_gaussian(self):
        x = sample_hermite_tridiag_batch(1, 2.0, RngSeed(11), 100_000)[:, 0]
        m, se = mean_and_se(x)
        assert abs(m) < 3 * se
        v, v_se = mean_and_se(x**2)
        assert abs(v - 1.0) < 3 * v_se

    @pytest.mark.parametrize("n", [2, 10, 50])
    @pytest.mark.parametrize("beta", [1.0, 2.0, 4.0])
    def test_second_moment_identity(self, n, beta):
        draws = sample_hermite_tridiag_batch(n, beta, RngSeed(5, n), 4000)
        m, se = mean_and_se(np.sum(draws**2, axis=1))
        assert abs(m - ((n - 1) + 2.0 / beta)) < 3 * se

    def test_odd_moments_vanish(self):
        draws = sample_hermite_tridiag_batch(6, 2.0, RngSeed(8), 20000)
        for power in (1, 3):
            m, se = mean_and_se(np.sum(draws**power, axis=1))
            assert abs(m) < 3 * se

    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.slow
    def test_matches_rejection_oracle(self, n):
        rng = np.random.default_rng(100 + n)
        count = 100_000 if n == 2 else 20_000
        exact = hermite_rejection(n, 2.0, count, rng)
        model = sample_hermite_tridiag_batch(n, 2.0, RngSeed(9, n), count)
        for col in range(n):
            _, p = ks_2samp(model[:, col], exact[:, col])
            assert p > 0.01

    def test_scale(self):
        assert tridiag_scale(4, 2.0) == pytest.approx(0.5)

    def test_deterministic(self):
        a = sample_hermite_tridiag(30, 1.5, RngSeed(4, 2))
        b = sample_hermite_tridiag(30, 1.5, RngSeed(4, 2))
        np.testing.assert_array_equal(a.values, b.values)
        assert a.domain is Domain.REAL_LINE

    def test_batch_rows_sorted(self):
        rows = sample_hermite_tridiag_batch(8, 1.0, RngSeed(1), 50)
        assert np.all(np.diff(rows, axis=1) > 0)


class TestMcmc:
    def test_deterministic(self):
        spec = EnsembleSpec.circular(2.0)
        p = McmcParams(burn_in=50)
        a = sample_mcmc(spec, 12, p, RngSeed(3, 1))
        b = sample_mcmc(spec, 12, p, RngSeed(3, 1))
        np.testing.assert_array_equal(a.values, b.values)

    @pytest.mark.parametrize(
        "spec, domain",
        [
            (EnsembleSpec.circular(1.0), Domain.CIRCLE),
            (EnsembleSpec.laguerre(2.0, 0.5), Domain.HALF_LINE),
            (EnsembleSpec.jacobi(4.0, 0.5, 0.7), Domain.INTERVAL),
            (EnsembleSpec.general(2.0, (0, 0, -1.5, 0, 0.25)), Domain.REAL_LINE),
        ],
    )
    def test_domains_respected(self, spec, domain):
        c = sample_mcmc(spec, 15, McmcParams(burn_in=100), RngSeed(1))
        assert c.domain is domain

    def test_hermite_matches_tridiagonal(self):
        n, count = 20, 400
        spec = EnsembleSpec.hermite(2.0)
        params = McmcParams()
        mc = np.concatenate(
            [sample_mcmc(spec, n, params, RngSeed(21, r)).values for r in range(count)]
        )
        tri = sample_hermite_tridiag_batch(n, 2.0, RngSeed(22), count).ravel()
        _, p = ks_2samp(mc, tri)
        assert p > 0.01

    def test_circular_two_energy(self):
        spec = EnsembleSpec.circular(2.0)
        h = [potential_energy(sample_mcmc(spec, 2, McmcParams(burn_in=50), RngSeed(31, r)), spec)
             for r in range(3000)]
        m, se = mean_and_se(h)
        assert abs(m - centering_constant(spec, 2)) < 3 * se

    @pytest.mark.parametrize(
        "spec",
        [EnsembleSpec.laguerre(2.0, 1.5), EnsembleSpec.jacobi(1.0, 1.5, 2.5), EnsembleSpec.circular(4.0)],
    )
    def test_energy_matches_exact_centering(self, spec):
        n = 8
        h = [potential_energy(sample_mcmc(spec, n, McmcParams(), RngSeed(41, r)), spec)
             for r in range(1500)]
        m, se = mean_and_se(h)
        assert abs(m - centering_constant(spec, n)) < 3 * se

    def test_chain_segments_agree(self):
        spec = EnsembleSpec.hermite(2.0)
        chain = mcmc_chain(spec, 10, McmcParams(thinning=20), RngSeed(51), 1200)
        h = np.array([potential_energy(c, spec) for c in chain])
        _, p = ks_2samp(h[:600], h[600:])
        assert p > 0.01

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            sample_mcmc(EnsembleSpec.hermite(2.0), 0, McmcParams(), RngSeed(0))
