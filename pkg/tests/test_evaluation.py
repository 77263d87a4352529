import numpy as np
import pytest
from scipy import integrate, stats

from conftest import random_measure
from mixpost._backend import _compiled, _fallback
from mixpost.evaluation import (
    DensityGrid,
    GridSlicer,
    GridSpec,
    density_on_grid,
    four_component_truth,
    mean_density_grid,
    mixing_measure_loss_table,
    simulate_four_component,
    sw_on_grid,
    tv_many,
    tv_on_grid,
)
from mixpost.measures import MixingMeasure
from mixpost.sliced import sliced_distance


def normal_1d(mu, sd=1.0):
    return lambda X: stats.norm(mu, sd).pdf(X[:, 0])


def point_grid(spec, index):
    v = np.zeros(int(np.prod(spec.resolution)))
    v[index] = 1.0 / spec.cell_volume
    return DensityGrid(spec, v)


class TestGridSpec:
    def test_bounds_from_data(self):
        data = np.array([[0.0, 5.0], [2.0, -1.0], [1.0, 3.0]])
        spec = GridSpec.from_data(data)
        np.testing.assert_array_equal(spec.lo, [-1.0, -2.0])
        np.testing.assert_array_equal(spec.hi, [3.0, 6.0])
        assert spec.resolution == (100, 100)
        assert spec.cell_volume == pytest.approx(4 / 100 * 8 / 100)

    def test_centres(self):
        spec = GridSpec(np.array([0.0]), np.array([1.0]), (4,))
        np.testing.assert_allclose(spec.centers()[:, 0], [0.125, 0.375, 0.625, 0.875])

    def test_centres_ij_order(self):
        spec = GridSpec(np.zeros(2), np.ones(2), (2, 3))
        C = spec.centers()
        assert C.shape == (6, 2)
        np.testing.assert_allclose(C[1], [0.25, 0.5])


class TestDensityOnGrid:
    def test_standard_normal_mass(self):
        spec = GridSpec(np.array([-8.0]), np.array([8.0]), (400,))
        mass = density_on_grid(normal_1d(0.0), spec).mass
        assert 0.995 <= mass <= 1.0 + 1e-9

    def test_zero_density(self):
        spec = GridSpec(np.zeros(2), np.ones(2), (5, 5))
        g = density_on_grid(lambda X: np.zeros(len(X)), spec)
        assert np.all(g.values == 0)
        with pytest.raises(ValueError):
            g.probabilities()

    def test_rejects_bad_values(self):
        spec = GridSpec(np.zeros(1), np.ones(1), (5,))
        with pytest.raises(ValueError):
            density_on_grid(lambda X: -np.ones(len(X)), spec)

    def test_truth_mass_default_grid(self):
        data, truth, _ = simulate_four_component(200, seed=0)
        g = density_on_grid(truth, GridSpec.from_data(data))
        assert abs(g.mass - 1.0) < 2e-2

    def test_mean_density(self, rng):
        spec = GridSpec(-np.ones(2) * 6, np.ones(2) * 6, (30, 30))
        ms = [random_measure(rng, 2, 2, spread=1.0) for _ in range(3)]
        g = mean_density_grid(ms, spec)
        np.testing.assert_allclose(g.values, np.mean([density_on_grid(m, spec).values for m in ms], axis=0))


class TestTV:
    def test_self(self):
        spec = GridSpec(np.array([-5.0]), np.array([5.0]), (100,))
        g = density_on_grid(normal_1d(0.0), spec)
        assert tv_on_grid(g, g) == 0.0

    def test_disjoint(self):
        spec = GridSpec(np.array([-20.0]), np.array([20.0]), (2000,))
        a = density_on_grid(normal_1d(-10.0), spec)
        b = density_on_grid(normal_1d(10.0), spec)
        assert tv_on_grid(a, b) == pytest.approx(1.0, abs=1e-2)

    def test_shifted_normals_quadrature(self):
        spec = GridSpec(np.array([-10.0]), np.array([10.1]), (4000,))
        a = density_on_grid(normal_1d(0.0), spec)
        b = density_on_grid(normal_1d(0.1), spec)
        ref = 0.5 * integrate.quad(lambda x: abs(stats.norm.pdf(x) - stats.norm.pdf(x, 0.1)), -12, 12,
                                   points=[0.05], limit=200)[0]
        assert tv_on_grid(a, b) == pytest.approx(ref, abs=1e-3)
        # closed form 2 Phi(0.05) - 1 as a second check
        assert ref == pytest.approx(2 * stats.norm.cdf(0.05) - 1, abs=1e-8)

    def test_metric(self, rng):
        spec = GridSpec(-np.ones(2) * 6, np.ones(2) * 6, (20, 20))
        gs = [density_on_grid(random_measure(rng, 2, 2, spread=1.5), spec) for _ in range(3)]
        a, b, c = gs
        assert tv_on_grid(a, b) == tv_on_grid(b, a)
        assert tv_on_grid(a, c) <= tv_on_grid(a, b) + tv_on_grid(b, c) + 1e-15
        np.testing.assert_allclose(tv_many(a, [b, c]), [tv_on_grid(a, b), tv_on_grid(a, c)], rtol=1e-14)

    def test_grid_mismatch(self):
        a = density_on_grid(normal_1d(0.0), GridSpec(np.zeros(1), np.ones(1), (5,)))
        b = density_on_grid(normal_1d(0.0), GridSpec(np.zeros(1), np.ones(1), (6,)))
        with pytest.raises(ValueError):
            tv_on_grid(a, b)


class TestGridSW:
    def test_self_zero(self, rng):
        spec = GridSpec(-np.ones(2) * 5, np.ones(2) * 5, (20, 20))
        g = density_on_grid(random_measure(rng, 2, 2, spread=1.0), spec)
        assert sw_on_grid(g, g, L=50) == 0.0

    def test_two_point_analytic(self):
        # point masses separated by u: SW_2^2 = |u|^2 E<v, u/|u|>^2 = |u|^2 / d
        spec = GridSpec(np.zeros(2), np.array([10.0, 10.0]), (10, 10))
        C = spec.centers()
        ia, ib = 11, 87
        u = C[ib] - C[ia]
        val = sw_on_grid(point_grid(spec, ia), point_grid(spec, ib), L=100_000, seed=0)
        assert val == pytest.approx(np.linalg.norm(u) / np.sqrt(2), rel=0.02)

    def test_seed_stability(self, rng):
        data = rng.normal(size=(50, 2))
        spec = GridSpec.from_data(data, resolution=40)
        a = density_on_grid(random_measure(rng, 3, 2, spread=1.0), spec)
        b = density_on_grid(random_measure(rng, 3, 2, spread=1.0), spec)
        s1 = sw_on_grid(a, b, L=1000, seed=1)
        s2 = sw_on_grid(a, b, L=1000, seed=2)
        assert abs(s1 - s2) / s1 < 0.05

    def test_symmetric_shared_seed(self, rng):
        spec = GridSpec(-np.ones(2) * 5, np.ones(2) * 5, (25, 25))
        a = density_on_grid(random_measure(rng, 2, 2, spread=1.0), spec)
        b = density_on_grid(random_measure(rng, 2, 2, spread=1.0), spec)
        assert sw_on_grid(a, b, L=200, seed=3) == pytest.approx(sw_on_grid(b, a, L=200, seed=3), rel=1e-12)

    def test_matches_discrete_sliced(self, rng):
        # a grid is a weighted point cloud; compare with a Dirac-atom mixing measure
        spec = GridSpec(-np.ones(2) * 3, np.ones(2) * 3, (6, 6))
        a = density_on_grid(random_measure(rng, 2, 2, spread=1.0), spec)
        b = density_on_grid(random_measure(rng, 2, 2, spread=1.0), spec)
        slicer = GridSlicer(spec, L=300, seed=9)
        ref = []
        for th, order in zip(slicer.proj_sorted, slicer.order):
            pa, pb = a.probabilities()[order], b.probabilities()[order]
            ref.append(stats.wasserstein_distance(th, th, pa, pb))  # W1 for p=1
        assert slicer.sw_pp(a, [b], p=1.0)[0] == pytest.approx(np.mean(ref), rel=1e-10)

    @pytest.mark.skipif(_compiled is None, reason="compiled backend not built")
    def test_backends_agree(self, rng):
        spec = GridSpec(-np.ones(2) * 5, np.ones(2) * 5, (30, 30))
        a = density_on_grid(random_measure(rng, 2, 2, spread=1.0), spec)
        bs = [density_on_grid(random_measure(rng, 2, 2, spread=1.0), spec) for _ in range(3)]
        s = GridSlicer(spec, L=50, seed=0)
        B = np.stack([b.probabilities() for b in bs])
        for p in (1.0, 2.0):
            x = _compiled.grid_sliced(s.proj_sorted, s.order, a.probabilities(), B, p)
            y = _fallback.grid_sliced(s.proj_sorted, s.order, a.probabilities(), B, p)
            np.testing.assert_allclose(x, y, rtol=1e-10, atol=1e-14)


class TestMixingTable:
    def test_equal_to_every_draw(self, rng):
        G = random_measure(rng, 3, 2)
        tab = mixing_measure_loss_table({"A": G}, [G, G, G], truth=G, L=30)
        for metric, row in tab["A"].items():
            assert row["expected"] == 0.0 and row["truth"] == 0.0

    def test_composition(self, rng):
        draws = [random_measure(rng, 2, 2) for _ in range(4)]
        truth = random_measure(rng, 3, 2)
        Ghats = {"x": draws[1], "y": random_measure(rng, 2, 2)}
        tab = mixing_measure_loss_table(Ghats, draws, truth=truth, L=40, seed=5, prune_floor=0.0)
        for name, G in Ghats.items():
            for metric in ("vectorized", "mix_sw", "smix_w"):
                vals = [sliced_distance(metric, 2.0, 40, 5, G, D).value for D in draws]
                assert tab[name][metric]["expected"] == pytest.approx(np.sqrt(np.mean(vals)), rel=1e-12)
                t = sliced_distance(metric, 2.0, 40, 5, G, truth).value
                assert tab[name][metric]["truth"] == pytest.approx(np.sqrt(t), rel=1e-12)

    def test_no_truth(self, rng):
        draws = [random_measure(rng, 2, 2) for _ in range(2)]
        tab = mixing_measure_loss_table({"a": draws[0]}, draws, L=10)
        assert "truth" not in tab["a"]["mix_sw"]


class TestSimulation:
    def test_truth(self):
        T = four_component_truth()
        np.testing.assert_array_equal(T.weights, np.full(4, 0.25))
        assert {tuple(m) for m in T.means} == {(-2, -2), (2, -2), (-2, 2), (2, 2)}
        for S in T.covs:
            np.testing.assert_array_equal(S, 2.25 * np.eye(2))

    def test_shape_and_determinism(self):
        a, T, z = simulate_four_component(200, seed=3)
        b, _, _ = simulate_four_component(200, seed=3)
        assert a.shape == (200, 2) and z.shape == (200,)
        np.testing.assert_array_equal(a, b)
        assert isinstance(T, MixingMeasure)

    def test_component_frequencies(self):
        _, _, z = simulate_four_component(100_000, seed=1)
        freq = np.bincount(z, minlength=4) / z.size
        assert np.all(np.abs(freq - 0.25) < 3 * np.sqrt(0.25 * 0.75 / z.size))

    def test_conditional_moments(self):
        y, T, z = simulate_four_component(40_000, seed=2)
        for k in range(4):
            pts = y[z == k]
            np.testing.assert_allclose(pts.mean(0), T.means[k], atol=0.06)
            np.testing.assert_allclose(np.cov(pts.T), T.covs[k], atol=0.12)

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            simulate_four_component(0)
