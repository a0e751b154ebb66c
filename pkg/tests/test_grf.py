import math

import numpy as np
import pytest

import streamforge as sf
from streamforge.errors import (
    InvalidArgumentError,
    InvalidParamsError,
    InvalidShapesError,
    NotPositiveDefiniteError,
)
from streamforge.grf import BatchedMatrix, DiagBatch

from conftest import fresh_streams


class TestBesselK:
    def test_half_order_closed_form(self):
        # K_{1/2}(x) = sqrt(pi / (2x)) * exp(-x)
        for x in (0.25, 1.0, 3.0):
            expected = math.sqrt(math.pi / (2 * x)) * math.exp(-x)
            assert abs(sf.bessel_k(0.5, x) - expected) < 1e-14
        assert round(sf.bessel_k(0.5, 1.0), 7) == 0.4610685

    def test_order_one_value(self):
        assert round(sf.bessel_k(1.0, 1.0), 7) == 0.6019072

    @pytest.mark.parametrize("nu", [0.5, 1.3, 1.7])
    @pytest.mark.parametrize("x", [0.3, 1.0, 4.0])
    def test_three_term_recurrence(self, nu, x):
        # K_{nu+1}(x) = K_{nu-1}(x) + (2 nu / x) K_nu(x)
        lhs = sf.bessel_k(nu + 1.0, x)
        rhs = sf.bessel_k(abs(nu - 1.0), x) + (2 * nu / x) * sf.bessel_k(nu, x)
        assert abs(lhs - rhs) < 1e-9 * abs(rhs)

    def test_domain_errors(self):
        with pytest.raises(InvalidArgumentError):
            sf.bessel_k(0.0, 1.0)
        with pytest.raises(InvalidArgumentError):
            sf.bessel_k(1.0, 0.0)
        with pytest.raises(InvalidArgumentError):
            sf.bessel_k(1.0, np.array([1.0, -2.0]))


class TestMaternCorrelation:
    def test_zero_distance_is_one(self):
        p = sf.MaternParams(shape=1.5, range=2.0, variance=3.0)
        assert sf.matern_correlation(p, [0.0, 1.0])[0] == 1.0

    def test_half_shape_is_exponential(self):
        # kappa = 1/2 collapses to exp(-sqrt(8 * 1/2) d / phi) = exp(-2d/phi)
        p = sf.MaternParams(shape=0.5, range=1.7, variance=1.0)
        d = np.linspace(0.01, 5.0, 40)
        expected = np.exp(-2.0 * d / 1.7)
        assert np.allclose(sf.matern_correlation(p, d), expected,
                           rtol=1e-10, atol=0)

    @pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
    def test_correlation_near_0_14_at_range(self, kappa):
        p = sf.MaternParams(shape=kappa, range=2.5, variance=1.0)
        corr = float(sf.matern_correlation(p, np.array([2.5]))[0])
        assert abs(corr - 0.14) < 0.02

    def test_invalid_params(self):
        with pytest.raises(InvalidParamsError):
            sf.MaternParams(shape=-1.0, range=1.0, variance=1.0)
        with pytest.raises(InvalidParamsError):
            sf.MaternParams(shape=1.0, range=1.0, variance=1.0, aniso_ratio=0.5)
        with pytest.raises(InvalidParamsError):
            sf.MaternParams.from_row([1.0, 2.0, 3.0])


class TestMaternCov:
    def test_diagonal_is_exactly_variance(self):
        grid = sf.GridSpec(4, 3, 1.0)
        cov = sf.matern_cov([sf.MaternParams(1.0, 2.0, 2.5)], grid)
        assert np.array_equal(np.diagonal(cov.block(0)),
                              np.full(grid.ncell, 2.5))

    def test_blocks_exactly_symmetric(self):
        grid = sf.GridSpec(5, 5, 0.7)
        cov = sf.matern_cov(
            [sf.MaternParams(1.5, 2.0, 1.0), sf.MaternParams(0.5, 1.0, 4.0)],
            grid,
        )
        for b in range(2):
            assert np.array_equal(cov.block(b), cov.block(b).T)

    def test_angle_irrelevant_when_ratio_is_one(self):
        grid = sf.GridSpec(6, 4, 1.0)
        a = sf.matern_cov(
            [sf.MaternParams(1.0, 2.0, 1.0, 1.0, 0.0)], grid
        ).block(0)
        b = sf.matern_cov(
            [sf.MaternParams(1.0, 2.0, 1.0, 1.0, 0.9)], grid
        ).block(0)
        assert np.allclose(a, b, rtol=0, atol=1e-12)

    def test_anisotropy_decorrelates_the_stretched_axis(self):
        # ratio 4, angle 0: y separation is stretched, x separation is not
        coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        cov = sf.matern_cov(
            [sf.MaternParams(1.0, 2.0, 1.0, 4.0, 0.0)], coords
        ).block(0)
        assert cov[0, 1] > cov[0, 2]

    def test_pairwise_entry_against_direct_evaluation(self):
        coords = np.array([[0.0, 0.0], [3.0, 4.0]])
        p = sf.MaternParams(1.2, 2.0, 1.7)
        cov = sf.matern_cov([p], coords).block(0)
        direct = 1.7 * float(sf.matern_correlation(p, np.array([5.0]))[0])
        assert abs(cov[0, 1] - direct) < 1e-14


class TestCholBatch:
    def test_identity(self):
        cov = BatchedMatrix(np.eye(3), 1)
        lmat, diag = sf.chol_batch(cov)
        assert np.array_equal(lmat.block(0), np.eye(3))
        assert np.array_equal(diag.data, np.ones((1, 3)))

    def test_2x2_hand_factorization(self):
        cov = BatchedMatrix(np.array([[4.0, 2.0], [2.0, 3.0]]), 1)
        lmat, diag = sf.chol_batch(cov)
        assert np.allclose(lmat.block(0), [[1.0, 0.0], [0.5, 1.0]],
                           rtol=0, atol=1e-14)
        assert np.allclose(diag.data[0], [4.0, 2.0], rtol=0, atol=1e-14)

    def test_512x512_matern_roundtrip(self):
        rng = np.random.default_rng(7)
        coords = rng.uniform(0, 10, size=(512, 2))
        cov = sf.matern_cov([sf.MaternParams(1.5, 3.0, 2.0)], coords)
        lmat, diag = sf.chol_batch(cov)
        rebuilt = lmat.block(0) @ np.diag(diag.data[0]) @ lmat.block(0).T
        err = np.abs(rebuilt - cov.block(0)).max()
        assert err < 1e-8 * np.abs(cov.block(0)).max()

    def test_not_positive_definite_names_batch_and_pivot(self):
        data = np.vstack([np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]])])
        with pytest.raises(NotPositiveDefiniteError) as exc:
            sf.chol_batch(BatchedMatrix(data, 2))
        assert exc.value.batch == 1
        assert exc.value.pivot >= 1


class TestMultiplyLowerDiagBatch:
    def test_identity_passthrough(self):
        lmat = BatchedMatrix(np.eye(3), 1)
        diag = DiagBatch(np.ones((1, 3)))
        z = np.arange(6.0).reshape(3, 2)
        out = sf.multiply_lower_diag_batch(lmat, diag, z)
        assert np.array_equal(out.block(0), z)

    def test_hand_example_with_sqrt_transform(self):
        lmat = BatchedMatrix(np.array([[1.0, 0.0], [0.5, 1.0]]), 1)
        diag = DiagBatch(np.array([[4.0, 2.0]]))
        out = sf.multiply_lower_diag_batch(lmat, diag, np.array([1.0, 1.0]))
        assert np.allclose(out.block(0).ravel(), [2.0, 1.0 + math.sqrt(2.0)],
                           rtol=0, atol=1e-14)

    def test_identity_transform_skips_sqrt(self):
        lmat = BatchedMatrix(np.eye(2), 1)
        diag = DiagBatch(np.array([[4.0, 9.0]]))
        out = sf.multiply_lower_diag_batch(
            lmat, diag, np.ones(2), transform="identity"
        )
        assert np.array_equal(out.block(0).ravel(), [4.0, 9.0])

    def test_batched_z_uses_per_batch_slices(self):
        lmat = BatchedMatrix(np.vstack([np.eye(2), np.eye(2)]), 2)
        diag = DiagBatch(np.ones((2, 2)))
        z = np.arange(4.0)[:, np.newaxis]
        out = sf.multiply_lower_diag_batch(lmat, diag, z)
        assert np.array_equal(out.block(0).ravel(), [0.0, 1.0])
        assert np.array_equal(out.block(1).ravel(), [2.0, 3.0])

    def test_monte_carlo_covariance_recovery(self):
        # sample covariance of L sqrt(D) z over 5000 draws vs the target
        grid = sf.GridSpec(6, 6, 1.0)
        cov = sf.matern_cov([sf.MaternParams(1.0, 2.5, 2.0)], grid)
        lmat, diag = sf.chol_batch(cov)
        rng = np.random.default_rng(42)
        z = rng.standard_normal((grid.ncell, 5000))
        sims = sf.multiply_lower_diag_batch(lmat, diag, z).block(0)
        sample_cov = sims @ sims.T / 5000.0
        target = cov.block(0)
        se = np.sqrt(
            (np.outer(np.diagonal(target), np.diagonal(target)) + target ** 2)
            / 5000.0
        )
        assert (np.abs(sample_cov - target) < 5 * se).all()

    def test_shape_errors(self):
        lmat = BatchedMatrix(np.eye(2), 1)
        diag = DiagBatch(np.ones((1, 2)))
        with pytest.raises(InvalidShapesError):
            sf.multiply_lower_diag_batch(lmat, diag, np.ones(3))
        with pytest.raises(InvalidShapesError):
            sf.multiply_lower_diag_batch(lmat, DiagBatch(np.ones((1, 3))),
                                         np.ones(2))
        with pytest.raises(InvalidArgumentError):
            sf.multiply_lower_diag_batch(lmat, diag, np.ones(2),
                                         transform="square")


class TestGridSpec:
    def test_cell_centres_row_major(self):
        grid = sf.GridSpec(2, 2, 2.0, origin=(10.0, 20.0))
        assert np.array_equal(
            grid.cell_coords(),
            [[11.0, 21.0], [13.0, 21.0], [11.0, 23.0], [13.0, 23.0]],
        )

    def test_invalid_dimensions(self):
        with pytest.raises(InvalidArgumentError):
            sf.GridSpec(0, 2, 1.0)
        with pytest.raises(InvalidArgumentError):
            sf.GridSpec(2, 2, 0.0)


class TestSimulateGrf:
    def test_output_shape_and_determinism(self):
        grid = sf.GridSpec(5, 4, 1.0)
        params = [sf.MaternParams(1.0, 2.0, 1.0), sf.MaternParams(0.5, 3.0, 2.0)]
        work = sf.WorkGrid(4, 4)
        a = sf.simulate_grf(params, grid, 3, fresh_streams(16), work)
        b = sf.simulate_grf(params, grid, 3, fresh_streams(16), work)
        assert a.shape == (2, 3, 4, 5)
        assert np.array_equal(a, b)

    def test_quadrupled_variance_doubles_fields(self):
        grid = sf.GridSpec(4, 4, 1.0)
        work = sf.WorkGrid(4, 4)
        base = sf.simulate_grf([sf.MaternParams(1.0, 2.0, 1.0)], grid, 2,
                               fresh_streams(16), work)
        scaled = sf.simulate_grf([sf.MaternParams(1.0, 2.0, 4.0)], grid, 2,
                                 fresh_streams(16), work)
        assert np.allclose(scaled, 2.0 * base, rtol=1e-12, atol=0)

    def test_empty_params_rejected(self):
        with pytest.raises(InvalidParamsError):
            sf.simulate_grf([], sf.GridSpec(2, 2, 1.0), 1, fresh_streams(4),
                            sf.WorkGrid(2, 2))

    def test_nonpositive_realizations_rejected(self):
        with pytest.raises(InvalidArgumentError):
            sf.simulate_grf([sf.MaternParams(1.0, 2.0, 1.0)],
                            sf.GridSpec(2, 2, 1.0), 0, fresh_streams(4),
                            sf.WorkGrid(2, 2))
