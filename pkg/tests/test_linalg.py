import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fstest.linalg import (
    DimensionMismatch,
    NotSPD,
    NotSymmetric,
    SpdMatrix,
    as_data_matrix,
    as_vector,
    empirical_quantile_sq_distance,
    mahalanobis_sq,
    mahalanobis_sq_many,
    trim_count,
)


def random_spd(rng, d):
    a = rng.standard_normal((d, d))
    return a @ a.T + d * np.eye(d)


class TestSpdMatrix:
    def test_identity(self):
        s = SpdMatrix.identity(3)
        assert s.d == 3
        assert s.is_identity
        assert np.array_equal(s.entries, np.eye(3))

    def test_rejects_nonsquare(self):
        with pytest.raises(DimensionMismatch):
            SpdMatrix(np.ones((2, 3)))

    def test_rejects_nonsymmetric(self):
        with pytest.raises(NotSymmetric):
            SpdMatrix(np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(NotSPD):
            SpdMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_rejects_singular(self):
        with pytest.raises(NotSPD):
            SpdMatrix(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_inverse_and_logdet(self, rng):
        m = random_spd(rng, 4)
        s = SpdMatrix(m)
        assert np.allclose(s.inverse @ m, np.eye(4), atol=1e-10)
        sign, logdet = np.linalg.slogdet(m)
        assert sign > 0
        assert s.log_det == pytest.approx(logdet, rel=1e-12)
        assert s.det == pytest.approx(np.exp(logdet), rel=1e-10)

    def test_cholesky_reconstructs(self, rng):
        m = random_spd(rng, 5)
        s = SpdMatrix(m)
        left = s.cholesky_factor
        assert np.allclose(left @ left.T, m, atol=1e-10)

    def test_eigenvalues_descending_positive(self, rng):
        s = SpdMatrix(random_spd(rng, 6))
        eig = s.eigenvalues
        assert np.all(eig > 0)
        assert np.all(np.diff(eig) <= 0)

    def test_entries_read_only(self, rng):
        s = SpdMatrix(random_spd(rng, 3))
        with pytest.raises(ValueError):
            s.entries[0, 0] = 99.0


class TestMahalanobis:
    def test_identity_is_squared_norm(self, rng):
        x = rng.standard_normal(4)
        mu = rng.standard_normal(4)
        got = mahalanobis_sq(x, mu, np.eye(4))
        assert got == pytest.approx(np.sum((x - mu) ** 2), rel=1e-12)

    def test_matches_direct_quadratic_form(self, rng):
        sigma = random_spd(rng, 3)
        x = rng.standard_normal(3)
        mu = rng.standard_normal(3)
        expect = (x - mu) @ np.linalg.inv(sigma) @ (x - mu)
        got = mahalanobis_sq(x, mu, SpdMatrix(sigma).inverse)
        assert got == pytest.approx(expect, rel=1e-10)

    def test_many_matches_loop(self, rng):
        sigma = SpdMatrix(random_spd(rng, 3))
        data = rng.standard_normal((8, 3))
        mu = rng.standard_normal(3)
        many = mahalanobis_sq_many(data, mu, sigma)
        singles = [mahalanobis_sq(row, mu, sigma.inverse) for row in data]
        assert np.allclose(many, singles, rtol=1e-12)

    def test_nonnegative_zero_at_center(self, rng):
        sigma = SpdMatrix(random_spd(rng, 4))
        mu = rng.standard_normal(4)
        assert mahalanobis_sq(mu, mu, sigma.inverse) == pytest.approx(0.0, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            mahalanobis_sq(np.ones(3), np.ones(2), np.eye(2))
        with pytest.raises(DimensionMismatch):
            mahalanobis_sq(np.ones(3), np.ones(3), np.eye(2))


class TestTrimCount:
    def test_examples(self):
        assert trim_count(100, 0.5) == 50
        assert trim_count(20, 0.3) == 6
        assert trim_count(10, 0.05) == 1  # clamped to one observation
        assert trim_count(7, 1.0) == 7

    def test_rejects_bad_gamma(self):
        for gamma in (0.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                trim_count(10, gamma)

    @given(st.integers(1, 10_000), st.floats(0.001, 1.0))
    def test_bounds(self, n, gamma):
        m = trim_count(n, gamma)
        assert 1 <= m <= n
        assert m == max(1, int(np.floor(n * gamma)))


class TestQuantileDistance:
    def test_selects_mth_smallest(self):
        dist = np.array([5.0, 1.0, 3.0, 2.0, 4.0])
        assert empirical_quantile_sq_distance(dist, 0.6) == 3.0
        assert empirical_quantile_sq_distance(dist, 1.0) == 5.0

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            empirical_quantile_sq_distance(np.array([1.0, -0.5]), 0.5)

    @given(
        st.lists(st.floats(0.0, 1e6), min_size=1, max_size=60),
        st.floats(0.01, 1.0),
    )
    def test_threshold_keeps_m_points(self, values, gamma):
        dist = np.asarray(values)
        q = empirical_quantile_sq_distance(dist, gamma)
        m = trim_count(dist.size, gamma)
        # at least m points fall at or below the threshold (ties can add more)
        assert np.count_nonzero(dist <= q) >= m


class TestCoercions:
    def test_as_vector_rejects_matrix(self):
        with pytest.raises(DimensionMismatch):
            as_vector(np.ones((2, 2)))

    def test_as_data_matrix_rejects_vector(self):
        with pytest.raises(DimensionMismatch):
            as_data_matrix(np.ones(4))

    def test_as_data_matrix_keeps_shape(self, rng):
        x = rng.standard_normal((7, 2))
        assert as_data_matrix(x).shape == (7, 2)
