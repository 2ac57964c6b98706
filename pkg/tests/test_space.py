import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import SOBOL_DIMS, radical_inverse_exact, sobol_reference
from surropt.space import (
    DesignSpace,
    SamplePlan,
    UnsupportedDimensionError,
    generate,
    halton,
    lhs,
    normalized_distances,
    radical_inverse,
    scale,
    sobol,
    uniform_random,
)


class TestDesignSpace:
    def test_validation(self):
        with pytest.raises(ValueError):
            DesignSpace([0.0], [0.0])
        with pytest.raises(ValueError):
            DesignSpace([1.0], [0.0])
        with pytest.raises(ValueError):
            DesignSpace([0.0, np.inf], [1.0, 2.0])
        with pytest.raises(ValueError):
            DesignSpace([], [])

    def test_arrays_read_only(self):
        s = DesignSpace([0.0], [1.0])
        with pytest.raises(ValueError):
            s.lower[0] = 3.0

    def test_equality_and_hash(self):
        a = DesignSpace.cube(2, -1, 1)
        b = DesignSpace([-1, -1], [1, 1])
        assert a == b and hash(a) == hash(b)
        assert a != DesignSpace.cube(2, -1, 2)

    def test_contains(self):
        s = DesignSpace.cube(2, 0, 5)
        assert s.contains([5.0, 0.0])
        assert not s.contains([5.1, 0.0])
        np.testing.assert_array_equal(s.contains([[1, 1], [6, 1]]), [True, False])


class TestSamplePlan:
    def test_rejects_out_of_cube_and_duplicates(self):
        with pytest.raises(ValueError):
            SamplePlan(np.array([[1.5]]), "sobol")
        with pytest.raises(ValueError):
            SamplePlan(np.array([[0.5], [0.5]]), "sobol")
        with pytest.raises(ValueError):
            SamplePlan(np.array([[0.5]]), "grid")


class TestHalton:
    def test_first_rows_base2(self):
        np.testing.assert_array_equal(halton(3, 1).points[:, 0], [0.5, 0.25, 0.75])

    def test_first_row_2d(self):
        np.testing.assert_allclose(halton(1, 2).points[0], [0.5, 1 / 3], rtol=0, atol=1e-15)

    def test_radical_inverse_base3(self):
        # 5 = 12_3 -> 0.21_3 = 2/3 + 1/9
        assert radical_inverse(5, 3) == pytest.approx(7 / 9, abs=1e-15)

    @given(st.integers(0, 10**9), st.sampled_from([2, 3, 5, 7, 11, 13]))
    def test_radical_inverse_correctly_rounded(self, index, base):
        assert radical_inverse(index, base) == float(radical_inverse_exact(index, base))

    def test_rejects_empty_and_large_d(self):
        with pytest.raises(ValueError):
            halton(0, 1)
        with pytest.raises(UnsupportedDimensionError):
            halton(1, 65)


class TestSobol:
    def test_first_point_skips_zero(self):
        np.testing.assert_array_equal(sobol(1, 2).points[0], [0.5, 0.5])

    def test_matches_direction_number_reference(self):
        ref = sobol_reference(64, SOBOL_DIMS)
        np.testing.assert_array_equal(sobol(64, 3).points, ref)

    def test_seed_is_skip_count(self):
        ref = sobol_reference(8, SOBOL_DIMS, skip=1 + 5)
        np.testing.assert_array_equal(sobol(8, 3, seed=5).points, ref)

    def test_second_point_differs(self):
        p = sobol(2, 1).points
        assert p[0, 0] != p[1, 0]

    @given(st.integers(1, 64), st.integers(1, 8), st.integers(0, 100))
    def test_prefix_property(self, n, d, seed):
        np.testing.assert_array_equal(sobol(n, d, seed).points, sobol(2 * n, d, seed).points[:n])


class TestRandomPlans:
    def test_lhs_strata(self):
        for seed in range(5):
            p = lhs(4, 2, seed).points
            for j in range(2):
                np.testing.assert_array_equal(np.bincount((p[:, j] * 4).astype(int), minlength=4), [1, 1, 1, 1])

    @given(st.integers(1, 50), st.integers(1, 6), st.integers(0, 2**32))
    def test_lhs_one_point_per_stratum(self, n, d, seed):
        p = lhs(n, d, seed).points
        for j in range(d):
            assert sorted((p[:, j] * n).astype(int).tolist()) == list(range(n))

    def test_single_point_in_cube(self):
        p = lhs(1, 3).points
        assert p.shape == (1, 3) and np.all((p >= 0) & (p <= 1))

    @pytest.mark.parametrize("tag", ["halton", "sobol", "lhs", "random"])
    def test_deterministic(self, tag):
        assert generate(tag, 17, 3, 4).points.tobytes() == generate(tag, 17, 3, 4).points.tobytes()

    def test_random_seeds_differ(self):
        assert not np.array_equal(uniform_random(4, 2, 0).points, uniform_random(4, 2, 1).points)

    def test_unknown_generator(self):
        with pytest.raises(ValueError):
            generate("pt-net", 4, 2)


class TestScale:
    def test_midpoint(self):
        np.testing.assert_array_equal(scale(np.array([[0.5, 0.5]]), DesignSpace.cube(2, 0, 5)), [[2.5, 2.5]])

    def test_corners(self):
        np.testing.assert_array_equal(scale(np.array([[0.0, 1.0]]), DesignSpace.cube(2, -10, 10)), [[-10, 10]])

    def test_identity_on_unit_cube(self):
        p = halton(10, 3)
        np.testing.assert_array_equal(scale(p, DesignSpace.cube(3)), p.points)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            scale(halton(2, 2), DesignSpace.cube(3))

    @given(st.integers(1, 30), st.integers(1, 5), st.floats(-1e3, 1e3), st.floats(1e-3, 1e3))
    def test_scaled_points_inside(self, n, d, lo, width):
        s = DesignSpace.cube(d, lo, lo + width)
        assert np.all(s.contains(scale(sobol(n, d), s)))

    def test_normalized_distances(self):
        s = DesignSpace([0.0, 0.0], [10.0, 2.0])
        assert normalized_distances([[0, 0]], [[10, 2]], s)[0, 0] == pytest.approx(np.sqrt(2))
