import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from betalog.ensembles import EnsembleSpec, Potential
from betalog.equilibrium import (
    NonGenericMeasureError,
    cell_kernel,
    check_box,
    detect_support,
    el_residual,
    energy,
    entropy_constant_general,
    entropy_functional,
    log_potential,
    log_z_one_cut,
    measure_from_density,
    project_simplex,
    solve_equilibrium,
    suggest_box,
)
from betalog.partition import entropy_constant, log_z_exact
from betalog.sampler import McmcParams, RngSeed, mcmc_chain

GAUSS = Potential.gaussian()
CRITICAL = Potential((0.0, 0.0, -1.0, 0.0, 0.25))
TWO_CUT = Potential((0.0, 0.0, -1.5, 0.0, 0.25))


def semicircle(x):
    return np.sqrt(np.clip(4 - x**2, 0, None)) / (2 * math.pi)


def semicircle_cdf(x):
    x = np.clip(x, -2, 2)
    return 0.5 + x * np.sqrt(4 - x**2) / (4 * math.pi) + np.arcsin(x / 2) / math.pi


def cells(m, box):
    h = 2 * box / m
    return -box + h * (np.arange(m) + 0.5), h


@pytest.fixture(scope="module")
def sc():
    return solve_equilibrium(GAUSS, 2000, 3.0, 1e-3)


class TestSemicircle:
    def test_converged(self, sc):
        assert sc.converged and sc.status == "converged"
        assert sc.el_residual < 1e-3

    def test_support(self, sc):
        assert len(sc.support) == 1
        a, b = sc.support[0]
        h = sc.cell_width
        assert abs(a + 2) <= h and abs(b - 2) <= h

    def test_density(self, sc):
        assert np.max(np.abs(sc.density - semicircle(sc.grid))) < 5e-3

    def test_energy(self, sc):
        assert sc.energy == pytest.approx(-0.75, abs=1e-3)
        assert energy(sc, GAUSS) == pytest.approx(sc.energy, abs=1e-10)

    def test_entropy(self, sc):
        assert entropy_functional(sc) == pytest.approx(-0.5, abs=5e-3)

    def test_simplex(self, sc):
        assert math.fsum(sc.weights) == pytest.approx(1.0, abs=1e-12)
        assert np.all(sc.weights >= 0) and np.all(sc.density >= 0)

    def test_el_invariants(self, sc):
        g = 2 * log_potential(sc, sc.grid) - GAUSS(sc.grid)
        on = sc.density > 1e-6 * sc.density.max()
        # pointwise values differ from cell averages by O(h²)
        slack = sc.el_residual + 1e-5
        assert np.max(np.abs(g[on] - sc.lagrange_l)) <= slack
        assert np.max(g[~on] - sc.lagrange_l) <= slack

    def test_lagrange_constant(self, sc):
        # 2∫log|x−y|dρ_sc − x²/2 = −1 on [−2,2]
        assert sc.lagrange_l == pytest.approx(-1.0, abs=1e-3)

    def test_residual_matches_recomputation(self, sc):
        assert el_residual(sc, GAUSS) == pytest.approx(sc.el_residual, abs=1e-10)

    def test_entropy_constants(self, sc):
        raw, norm = entropy_constant_general(GAUSS, 2.0, sc)
        assert norm == entropy_constant(EnsembleSpec.hermite(2.0))
        assert raw == pytest.approx(0.7606614 + 0.5, abs=5e-3)
        assert norm - raw == pytest.approx(-0.5, abs=5e-3)

    def test_one_cut_log_z_reduces_to_hermite(self, sc):
        exact = log_z_exact(EnsembleSpec.hermite(2.0), 50).log_z
        assert log_z_one_cut(GAUSS, 2.0, 50, sc) == pytest.approx(exact, abs=0.05)

    def test_csv(self, sc, tmp_path):
        path = tmp_path / "m.csv"
        sc.to_csv(path)
        rows = path.read_text().splitlines()
        assert rows[0] == "x,density,weight"
        assert len(rows) == 2001
        assert float(rows[1000].split(",")[2]) == sc.weights[999]


def test_exact_semicircle_residual():
    x, h = cells(2000, 3.0)
    w = np.diff(semicircle_cdf(np.concatenate([x - h / 2, [x[-1] + h / 2]])))
    m = measure_from_density(x, w, GAUSS)
    assert m.el_residual < 5e-3
    assert el_residual(m, GAUSS) == pytest.approx(m.el_residual)


def test_uniform_is_not_stationary():
    x, h = cells(2000, 3.0)
    w = np.where(np.abs(x) < 2, 1.0, 0.0)
    assert el_residual(measure_from_density(x, w), GAUSS) > 0.05


def test_refinement():
    energies = [solve_equilibrium(GAUSS, m, 3.0).energy for m in (1000, 2000, 4000)]
    errors = [abs(e + 0.75) for e in energies]
    for m, err in zip((1000, 2000, 4000), errors):
        h = 6.0 / m
        assert err < h * math.log(1 / h)
    assert abs(energies[1] - energies[2]) < abs(energies[0] - energies[2])


def test_constant_shift_moves_multiplier():
    base = solve_equilibrium(GAUSS, 800, 3.0)
    shifted = solve_equilibrium(GAUSS.shifted(0.7), 800, 3.0)
    np.testing.assert_allclose(shifted.density, base.density, atol=1e-9)
    assert shifted.lagrange_l == pytest.approx(base.lagrange_l - 0.7, abs=1e-6)


def test_two_cut_intervals_symmetric():
    m = solve_equilibrium(TWO_CUT, 2000, suggest_box(TWO_CUT))
    assert m.converged
    assert len(m.support) == 2
    (a, b), (c, d) = m.support
    h = m.cell_width
    assert b < c
    assert abs(a + d) <= h and abs(b + c) <= h
    assert m.el_residual < 1e-3
    assert m.edge_generic == (True, True, True, True)
    assert np.isfinite(entropy_functional(m))


def test_critical_quartic_closed_form():
    m = solve_equilibrium(CRITICAL, 2000, 3.0)
    exact = m.grid**2 * np.sqrt(np.clip(4 - m.grid**2, 0, None)) / (2 * math.pi)
    assert np.max(np.abs(m.density - exact)) < 1e-2
    assert m.el_residual < 1e-3
    with pytest.raises(NonGenericMeasureError):
        entropy_functional(m)


def test_generic_edges_flagged(sc):
    assert sc.edge_generic == (True, True)


def test_projected_gradient_small_grid():
    pg = solve_equilibrium(GAUSS, 200, 3.0, 1e-3, method="projected_gradient")
    ref = solve_equilibrium(GAUSS, 200, 3.0, 1e-3)
    assert pg.converged, pg.status
    assert pg.el_residual < 1e-3
    assert pg.energy == pytest.approx(ref.energy, abs=1e-5)
    assert math.fsum(pg.weights) == pytest.approx(1.0, abs=1e-12)


def test_iteration_cap_reports_failure():
    m = solve_equilibrium(GAUSS, 200, 3.0, 1e-8, method="projected_gradient", max_iter=3)
    assert not m.converged
    assert m.status == "iteration cap reached"
    assert np.isfinite(m.el_residual)


class TestValidation:
    def test_non_confining(self):
        with pytest.raises(ValueError):
            solve_equilibrium(Potential((0.0, 0.0, -1.0)), 400, 3.0)
        with pytest.raises(ValueError):
            Potential((0.0, 1.0, 0.0, 1.0)).check_confining()

    def test_small_box(self):
        with pytest.raises(ValueError):
            check_box(GAUSS, 1.0)
        with pytest.raises(ValueError):
            solve_equilibrium(GAUSS, 400, 1.0)

    def test_grid_size(self):
        with pytest.raises(ValueError):
            solve_equilibrium(GAUSS, 100, 3.0)


class TestEntropy:
    def test_uniform_unit_interval(self):
        x = (np.arange(2000) + 0.5) / 2000
        m = measure_from_density(x, np.ones(2000))
        expected = -1 + math.log(2 * math.pi)
        assert entropy_functional(m, edge_cells=0) == pytest.approx(expected, abs=1e-12)
        assert entropy_functional(m) == pytest.approx(expected, abs=1e-3)
        assert expected == pytest.approx(0.8378771, abs=1e-7)

    @pytest.mark.parametrize("c", [0.5, 2.0, 3.7])
    def test_scaling(self, c):
        x, h = cells(2000, 3.0)
        w = np.diff(semicircle_cdf(np.concatenate([x - h / 2, [x[-1] + h / 2]])))
        base = entropy_functional(measure_from_density(x, w))
        scaled = entropy_functional(measure_from_density(x / c, w))
        assert scaled - base == pytest.approx(math.log(c), abs=1e-12)

    def test_exact_semicircle(self):
        x, h = cells(4000, 3.0)
        w = np.diff(semicircle_cdf(np.concatenate([x - h / 2, [x[-1] + h / 2]])))
        assert entropy_functional(measure_from_density(x, w)) == pytest.approx(-0.5, abs=1e-3)

    def test_interior_zero(self):
        x, h = cells(1000, 3.0)
        w = x**2 * (np.abs(x) < 2) + 1e-9 * (np.abs(x) < 2)
        with pytest.raises(NonGenericMeasureError):
            entropy_functional(measure_from_density(x, w))


class TestKernel:
    def test_symmetric_toeplitz(self):
        k = cell_kernel(50, 0.1)
        np.testing.assert_array_equal(k, k.T)
        assert k[0, 0] == pytest.approx(math.log(0.1) - 1.5, abs=1e-14)
        assert k[3, 7] == k[10, 14]

    def test_far_entries_approach_point_values(self):
        k = cell_kernel(400, 0.01)
        assert k[0, 300] == pytest.approx(math.log(3.0), abs=1e-5)

    def test_conditionally_negative_definite(self, rng):
        k = cell_kernel(120, 0.05)
        for _ in range(20):
            d = rng.normal(size=120)
            d -= d.mean()
            assert d @ k @ d < 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40))
def test_project_simplex_property(values):
    p = project_simplex(values)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1.0) < 1e-9
    # projection is idempotent
    np.testing.assert_allclose(project_simplex(p), p, atol=1e-12)


def test_detect_support_bridges_single_gaps():
    grid = np.arange(10) + 0.5
    density = np.array([0, 1, 1, 0, 1, 1, 0, 0, 1, 0], dtype=float)
    assert detect_support(grid, density) == ((1.0, 6.0), (8.0, 9.0))


def test_monte_carlo_histogram_approaches_density():
    v = Potential((0.0, 0.0, 0.5, 0.0, 0.25))
    m = solve_equilibrium(v, 2000, suggest_box(v))
    spec = EnsembleSpec.general(2.0, v)
    bins = np.linspace(-2.5, 2.5, 26)
    width = bins[1] - bins[0]
    # cell masses of the solved measure on the same bins
    cdf = np.concatenate([[0.0], np.cumsum(m.weights)])
    edges = m.edges
    ref = np.diff(np.interp(bins, edges, cdf)) / width
    dists = []
    for n in (50, 100, 200):
        chain = mcmc_chain(spec, n, McmcParams(thinning=5), RngSeed(13, n), 20_000 // n)
        points = np.concatenate([c.values for c in chain])
        hist, _ = np.histogram(points, bins=bins)
        dists.append(np.max(np.abs(hist / (points.size * width) - ref)))
    assert dists[0] > dists[1] > dists[2]
