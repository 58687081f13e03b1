import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fstest.estimators import (
    Estimate,
    EstimatorKind,
    ForwardSearchConfig,
    batch_estimates,
    cw_median,
    estimate,
    forward_search,
    hodges_lehmann,
    sample_mean,
)
from fstest.linalg import DimensionMismatch, SpdMatrix

finite_rows = arrays(
    float,
    st.tuples(st.integers(2, 24), st.integers(1, 4)),
    elements=st.floats(-1e6, 1e6, allow_nan=False),
)


def hl_bruteforce(data):
    """Coordinatewise median over all Walsh averages (x_i + x_j) / 2, i <= j."""
    x = np.asarray(data, dtype=float)
    i, j = np.triu_indices(x.shape[0])
    walsh = (x[i] + x[j]) / 2.0
    return np.median(walsh, axis=0)


class TestForwardSearch:
    def config(self, d=2, gamma=0.5, mu0=None):
        return ForwardSearchConfig(
            np.zeros(d) if mu0 is None else np.asarray(mu0, dtype=float),
            SpdMatrix.identity(d),
            gamma,
        )

    def test_keeps_closest_points(self):
        data = np.array([[10.0, 0.0], [0.1, 0.0], [0.0, 0.2], [-9.0, 1.0]])
        est = forward_search(data, self.config(gamma=0.5))
        assert np.allclose(est.value, data[1:3].mean(axis=0))
        assert est.n_used == 2
        assert est.kind is EstimatorKind.FORWARD_SEARCH

    def test_gamma_one_equals_mean(self, gauss_data):
        data = gauss_data(n=31, d=3)
        est = forward_search(data, self.config(d=3, gamma=1.0))
        assert np.allclose(est.value, data.mean(axis=0), atol=1e-12)

    def test_boundary_tie_resolved_by_input_order(self):
        # three points at equal distance 1; m = 2 keeps the first two
        data = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
        est = forward_search(data, self.config(gamma=0.67))
        assert est.n_used == 2
        assert np.allclose(est.value, [[0.0, 0.0]])

    def test_anchor_matters(self):
        data = np.array([[0.0, 0.0], [4.0, 4.0], [4.1, 4.0], [8.0, 8.0]])
        near_origin = forward_search(data, self.config(gamma=0.5))
        near_corner = forward_search(data, self.config(gamma=0.5, mu0=[4.0, 4.0]))
        assert np.allclose(near_origin.value, data[:2].mean(axis=0))
        assert np.allclose(near_corner.value, data[1:3].mean(axis=0))

    def test_scatter_changes_the_kept_set(self):
        data = np.array([[2.0, 0.0], [0.0, 1.1]])
        # squashing the first axis makes the [2, 0] point the nearer one
        squashed = ForwardSearchConfig(
            np.zeros(2), SpdMatrix(np.diag([16.0, 1.0])), 0.5
        )
        est = forward_search(data, squashed)
        assert np.allclose(est.value, [2.0, 0.0])

    def test_at_least_one_point_kept(self):
        data = np.array([[5.0, 5.0], [6.0, 6.0]])
        est = forward_search(data, self.config(gamma=0.01))
        assert est.n_used == 1
        assert np.allclose(est.value, [5.0, 5.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            forward_search(np.ones((4, 3)), self.config(d=2))

    @given(finite_rows, st.floats(0.05, 1.0))
    def test_mean_of_reported_subset_size(self, data, gamma):
        config = ForwardSearchConfig(
            np.zeros(data.shape[1]), SpdMatrix.identity(data.shape[1]), gamma
        )
        est = forward_search(data, config)
        assert est.n_used == max(1, int(np.floor(data.shape[0] * gamma)))
        assert est.n == data.shape[0]


class TestPlainEstimators:
    def test_mean(self):
        data = np.array([[1.0, 2.0], [3.0, 6.0]])
        assert np.allclose(sample_mean(data).value, [2.0, 4.0])

    def test_cw_median_odd_even(self):
        odd = np.array([[1.0], [5.0], [2.0]])
        even = np.array([[1.0], [5.0], [2.0], [4.0]])
        assert cw_median(odd).value[0] == 2.0
        assert cw_median(even).value[0] == 3.0

    def test_cw_median_is_coordinatewise(self):
        data = np.array([[0.0, 10.0], [1.0, -10.0], [2.0, 0.0]])
        assert np.allclose(cw_median(data).value, [1.0, 0.0])

    def test_hl_tiny_case(self):
        # Walsh averages of {0, 2}: 0, 1, 2 -> median 1
        data = np.array([[0.0], [2.0]])
        assert hodges_lehmann(data).value[0] == 1.0

    def test_hl_single_point(self):
        data = np.array([[3.0, -1.0]])
        assert np.allclose(hodges_lehmann(data).value, [3.0, -1.0])

    @given(finite_rows)
    def test_hl_matches_bruteforce(self, data):
        got = hodges_lehmann(data).value
        assert np.allclose(got, hl_bruteforce(data), rtol=1e-12, atol=1e-9)

    @given(finite_rows)
    @settings(max_examples=25)
    def test_shift_equivariance(self, data):
        shift = np.arange(1.0, data.shape[1] + 1.0)
        for fn in (sample_mean, cw_median, hodges_lehmann):
            base = fn(data).value
            moved = fn(data + shift).value
            assert np.allclose(moved, base + shift, rtol=1e-9, atol=1e-6)

    def test_forward_search_shift_equivariance(self, gauss_data):
        data = gauss_data(n=25, d=3)
        shift = np.array([10.0, -4.0, 2.0])
        base = forward_search(
            data, ForwardSearchConfig(np.zeros(3), SpdMatrix.identity(3), 0.4)
        )
        moved = forward_search(
            data + shift, ForwardSearchConfig(shift, SpdMatrix.identity(3), 0.4)
        )
        assert np.allclose(moved.value, base.value + shift, atol=1e-12)


class TestDispatch:
    def test_estimate_routes_each_kind(self, gauss_data):
        data = gauss_data(n=20, d=2)
        config = ForwardSearchConfig(np.zeros(2), SpdMatrix.identity(2), 0.5)
        for kind, direct in (
            (EstimatorKind.MEAN, sample_mean(data)),
            (EstimatorKind.CW_MEDIAN, cw_median(data)),
            (EstimatorKind.HODGES_LEHMANN, hodges_lehmann(data)),
            (EstimatorKind.FORWARD_SEARCH, forward_search(data, config)),
        ):
            routed = estimate(kind, data, config)
            assert routed.kind is kind
            assert np.allclose(routed.value, direct.value)

    def test_forward_search_requires_config(self, gauss_data):
        with pytest.raises(ValueError):
            estimate(EstimatorKind.FORWARD_SEARCH, gauss_data())


class TestBatch:
    @pytest.mark.parametrize("kind", list(EstimatorKind))
    def test_batch_matches_singles(self, kind, rng):
        reps, n, d = 7, 30, 3
        data = rng.standard_normal((reps, n, d))
        mu0 = np.zeros(d)
        sigma = SpdMatrix.identity(d)
        got = batch_estimates(kind, data, mu0, sigma, 0.5)
        config = ForwardSearchConfig(mu0, sigma, 0.5)
        expect = np.stack([estimate(kind, data[r], config).value for r in range(reps)])
        assert got.shape == (reps, d)
        assert np.allclose(got, expect, rtol=1e-12, atol=1e-12)

    def test_batch_hl_chunking_consistent(self, rng):
        # large enough that the Walsh buffer spans several chunks
        data = rng.standard_normal((40, 150, 2))
        got = batch_estimates(EstimatorKind.HODGES_LEHMANN, data, np.zeros(2), SpdMatrix.identity(2), 0.5)
        expect = np.stack([hl_bruteforce(data[r]) for r in range(40)])
        assert np.allclose(got, expect, rtol=1e-12, atol=1e-9)


class TestEstimateRecord:
    def test_metadata(self, gauss_data):
        data = gauss_data(n=24, d=2)
        config = ForwardSearchConfig(np.zeros(2), SpdMatrix.identity(2), 0.25)
        est = forward_search(data, config)
        assert isinstance(est, Estimate)
        assert (est.n, est.n_used, est.gamma) == (24, 6, 0.25)
        assert sample_mean(data).gamma is None

    def test_config_validates_gamma(self):
        with pytest.raises(ValueError):
            ForwardSearchConfig(np.zeros(2), SpdMatrix.identity(2), 0.0)

    def test_config_validates_dimensions(self):
        with pytest.raises(DimensionMismatch):
            ForwardSearchConfig(np.zeros(3), SpdMatrix.identity(2), 0.5)
