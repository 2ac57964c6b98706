import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from surropt import kriging, mds
from surropt.dataset import Dataset, ModelFitError
from surropt.kriging import DegenerateDataError
from surropt.space import DesignSpace, scale, sobol, uniform_random

LINE = DesignSpace([0.0], [2.0])


def random_dataset(seed, n, d, lo=-3.0, hi=7.0):
    rng = np.random.default_rng(seed)
    space = DesignSpace.cube(d, lo, hi)
    X = scale(uniform_random(n, d, seed), space)
    F = np.sin(X).sum(axis=1) + 0.1 * rng.normal(size=n)
    return Dataset(X, F, space)


datasets = st.builds(
    random_dataset, st.integers(0, 2**32), st.integers(3, 40), st.integers(1, 5)
)


class TestDataset:
    def test_validation(self):
        with pytest.raises(ValueError):
            Dataset([[0.0, 1.0]], [1.0], LINE)
        with pytest.raises(ValueError):
            Dataset([[0.0]], [np.nan], LINE)
        with pytest.raises(ValueError):
            Dataset([[0.0], [1.0]], [1.0], LINE)

    def test_distances_normalised(self):
        ds = Dataset([[0.0], [2.0]], [0.0, 1.0], LINE)
        np.testing.assert_array_equal(ds.distances, [[0, 1], [1, 0]])

    def test_append_returns_new(self):
        ds = Dataset([[0.0]], [1.0], LINE)
        ds2 = ds.append([1.0], 2.0)
        assert ds.n == 1 and ds2.n == 2

    def test_duplicates(self):
        ds = Dataset([[0.5], [0.5]], [1.0, 2.0], LINE)
        with pytest.raises(ModelFitError) as err:
            ds.check_distinct()
        assert err.value.points == (0, 1)


class TestCorrelogram:
    def test_hand_enumeration(self):
        ds = Dataset([[0.0], [1.0], [2.0]], [0.0, 1.0, 0.0], LINE)
        cg = kriging.empirical_correlogram(ds)
        np.testing.assert_allclose(cg.r, [0.5, 1.0])
        np.testing.assert_allclose(cg.gamma, [0.5, 0.0])
        assert cg.sill == pytest.approx(1 / 3)

    def test_constant_values(self):
        ds = Dataset([[0.0], [1.0], [2.0]], [4.0, 4.0, 4.0], LINE)
        with pytest.raises(DegenerateDataError):
            kriging.empirical_correlogram(ds)
        assert kriging.fit_width(ds) > 0

    def test_two_points(self):
        ds = Dataset([[0.0], [1.0]], [0.0, 1.0], LINE)
        with pytest.raises(ValueError):
            kriging.empirical_correlogram(ds)
        assert kriging.fit_width(ds) == pytest.approx(2 * 0.5)

    def test_self_consistency(self):
        r = np.linspace(0.05, 1.0, 20)
        a = kriging.fit_width_to_correlogram(r, np.exp(-((r / 0.7) ** 2)), 1.0)
        assert a == pytest.approx(0.7, abs=0.02)

    def test_gamma_fit_from_sampled_field(self):
        # a smooth random field fit on dense samples should give a width well inside the search range
        ds = random_dataset(0, 60, 2)
        a = kriging.fit_width(ds)
        r_max = ds.distances.max()
        assert 0.05 * r_max < a < 2 * r_max


class TestGamma:
    def test_single_point(self):
        np.testing.assert_array_equal(kriging.assemble_gamma([[0.3]], 1.0), [[1, 1], [1, 0]])

    def test_symmetric_for_equal_widths(self):
        G = kriging.assemble_gamma([[0.0], [0.4]], [0.5, 0.5])
        np.testing.assert_array_equal(G, G.T)

    def test_unsymmetric_for_unequal_widths(self):
        G = kriging.assemble_gamma([[0.0], [0.4]], [0.5, 0.9])
        assert G[0, 1] == pytest.approx(np.exp(-((0.4 / 0.5) ** 2)))
        assert G[1, 0] == pytest.approx(np.exp(-((0.4 / 0.9) ** 2)))
        assert G[0, 1] != G[1, 0]

    def test_rejects_bad_width(self):
        with pytest.raises(ValueError):
            kriging.assemble_gamma([[0.0], [1.0]], [1.0, 0.0])


class TestKriging:
    def test_single_point_is_constant(self):
        ds = Dataset([[0.7]], [3.25], LINE)
        m = kriging.fit(ds)
        np.testing.assert_allclose(m.predict_many([[0.0], [1.3], [2.0]]), 3.25)

    def test_equidistant_midpoint(self):
        ds = Dataset([[0.5], [1.5]], [2.0, 6.0], LINE)
        assert kriging.fit(ds, 0.4).predict([1.0]) == pytest.approx(4.0)

    def test_duplicate_points(self):
        ds = Dataset([[0.5], [0.5]], [1.0, 2.0], LINE)
        with pytest.raises(ModelFitError):
            kriging.fit(ds)

    def test_singular_names_points(self):
        # nearly coincident points with a very wide kernel make two rows identical to machine precision
        ds = Dataset([[0.5], [0.5 + 1e-8]], [1.0, 2.0], LINE)
        with pytest.raises(ModelFitError) as err:
            kriging.fit(ds, 100.0)
        assert err.value.points == (0, 1)

    @given(datasets)
    def test_interpolates(self, ds):
        m = kriging.fit(ds)
        np.testing.assert_allclose(m.predict_many(ds.points), ds.values, rtol=1e-8, atol=1e-8 * np.abs(ds.values).max())

    @given(datasets, st.integers(0, 1000))
    def test_weights_sum_to_one(self, ds, seed):
        m = kriging.fit(ds)
        X = scale(uniform_random(20, ds.d, seed), ds.space)
        np.testing.assert_allclose(m.weights(X)[:, : ds.n].sum(axis=1), 1.0, atol=1e-10)

    def test_refit_after_append(self, sasena16):
        from surropt.bench import sasena

        x = np.array([2.2, 3.1])
        ds = sasena16.append(x, sasena(x))
        m = kriging.fit(ds)
        assert m.n == sasena16.n + 1
        np.testing.assert_allclose(m.predict_many(ds.points), ds.values, rtol=1e-8)


class TestSpline:
    def test_kernel(self):
        assert mds.kernel(0.0, 3.0) == 1.0
        assert mds.kernel(0.25, 4.0) == 0.0
        assert mds.kernel(0.5, 1.0) == 0.5
        assert mds.kernel(2.0, 1.0) == 0.0
        with pytest.raises(ValueError):
            mds.kernel(-0.1, 1.0)

    def test_disjoint_supports(self):
        ds = Dataset([[0.0], [2.0]], [0.0, 1.0], LINE)
        m = mds.fit(ds, [1.0, 1.0])
        np.testing.assert_array_equal(m.matrix, np.eye(2))
        np.testing.assert_array_equal(m.w, [0.0, 1.0])
        assert m.predict([1.0]) == pytest.approx(0.5)

    def test_single_point(self):
        ds = Dataset([[0.4]], [7.0], LINE)
        m = mds.fit(ds, 2.0)
        assert m.w[0] == 7.0 and m.predict([0.4]) == 7.0

    def test_symmetric_matrix_for_equal_slopes(self):
        ds = random_dataset(3, 10, 2)
        A = mds.fit(ds, 0.5).matrix
        np.testing.assert_array_equal(A, A.T)

    def test_outside_support_is_zero(self):
        ds = Dataset([[0.0], [0.2]], [1.0, 2.0], LINE)
        assert mds.fit(ds, 5.0).predict([2.0]) == 0.0

    def test_default_slope(self):
        ds = Dataset([[0.0], [1.0], [2.0]], [0.0, 1.0, 0.0], LINE)
        assert mds.default_slope(ds) == pytest.approx(2.0)

    def test_singular_reports_points(self):
        # two points with identical full-coverage kernels: A = [[1, 1 - e], [1 - e, 1]] with e ~ 1e-16
        ds = Dataset([[0.0], [1e-15]], [1.0, 2.0], DesignSpace([0.0], [1.0]))
        with pytest.raises(ModelFitError):
            mds.fit(ds, 0.01)

    @given(datasets)
    def test_interpolates(self, ds):
        m = mds.fit(ds)
        np.testing.assert_allclose(m.predict_many(ds.points), ds.values, rtol=1e-8, atol=1e-8 * np.abs(ds.values).max())

    @given(datasets, st.integers(0, 1000))
    def test_lipschitz(self, ds, seed):
        m = mds.fit(ds)
        rng = np.random.default_rng(seed)
        u = rng.random((10, ds.d))
        du = 1e-3 * rng.normal(size=(10, ds.d))
        x, y = ds.space.denormalize(u), ds.space.denormalize(np.clip(u + du, 0, 1))
        step = np.linalg.norm(ds.space.normalize(y) - u, axis=1)
        bound = np.sum(np.abs(m.w) * m.b) * step
        assert np.all(np.abs(m.predict_many(x) - m.predict_many(y)) <= bound * (1 + 1e-9) + 1e-12)


class TestWidthGuard:
    def test_dense_1d_is_conditioned(self):
        X = np.linspace(0.0, 2.0, 60)[:, None]
        ds = Dataset(X, np.sin(3 * X[:, 0]), LINE)
        a = kriging.fit_width(ds)
        assert kriging.fit(ds, a).condition_number() <= kriging.GUARD_KAPPA

    def test_leaves_well_conditioned_width(self, sasena16):
        assert kriging.guard_width(sasena16, 0.3) == 0.3

    def test_shrinks_geometrically(self):
        ds = Dataset(np.linspace(0.0, 2.0, 30)[:, None], np.zeros(30), LINE)
        a = kriging.guard_width(ds, 1.0)
        steps = np.log(a) / np.log(kriging.GUARD_SHRINK)
        assert steps == pytest.approx(round(steps)) and steps >= 1
