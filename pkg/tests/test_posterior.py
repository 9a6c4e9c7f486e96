"""Tests for posterior assembly and the conjugate linear-elastic oracle.

The closed-form posterior is checked against scalar arithmetic, its
limits (flat prior, no data), its update properties (shift, strict
narrowing, batch equals sequential), and a grid-search oracle on the
assembled log-posterior.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
import pytest

from plastinfer import (
    ConfigurationError,
    LogPosterior,
    MeasurementSet,
    ModelKind,
    NoiseSpec,
    ParameterVector,
    QuadratureSpec,
    TruncatedNormalPrior,
    analytic_le_posterior,
    generate_double_noise,
    generate_single_noise,
    log_likelihood,
    stress,
)

PRIOR_MEAN = 150.0
PRIOR_STD = 50.0
NOISE_STD = 0.01
STRAIN_1 = 7.25e-4
STRESS_1 = 0.1576


def _reference_posterior():
    return analytic_le_posterior(PRIOR_MEAN, PRIOR_STD, [STRAIN_1], [STRESS_1], NOISE_STD)


class TestAnalyticPosterior:
    def test_scalar_arithmetic(self):
        """The closed form equals the formula written out by hand."""
        post = _reference_posterior()
        s2, p2 = NOISE_STD**2, PRIOR_STD**2
        denom = s2 + p2 * STRAIN_1**2
        assert post.mean == pytest.approx((s2 * PRIOR_MEAN + p2 * STRAIN_1 * STRESS_1) / denom,
                                          rel=1e-14)
        assert post.std == pytest.approx(math.sqrt(s2 * p2 / denom), rel=1e-14)

    def test_reference_scale(self):
        """The posterior scale for the reference measurement; it does not
        depend on the measured stress, so it reproduces sharply."""
        assert _reference_posterior().std == pytest.approx(13.2964, abs=1e-3)

    def test_reference_location(self):
        """The location for the reference measurement.

        The measured stress enters with gain d(mean)/d(stress) = 1281.8,
        and the stress itself is only known to four decimals, so the
        location is only pinned to gain times the half-quantum 5e-5.
        """
        assert _reference_posterior().mean == pytest.approx(212.6486, abs=1281.8 * 5e-5)

    def test_flat_prior_limit_is_least_squares(self):
        strains = np.array([2e-4, 5e-4, 9e-4, 1.3e-3])
        stresses = 207.0 * strains + np.array([0.004, -0.002, 0.009, -0.006])
        post = analytic_le_posterior(150.0, 1e9, strains, stresses, NOISE_STD)
        slope = float(strains @ stresses / (strains @ strains))
        assert post.mean == pytest.approx(slope, rel=1e-9)

    def test_no_data_returns_prior(self):
        post = analytic_le_posterior(400.0, 10.0, [], [], NOISE_STD)
        assert post.mean == 400.0
        assert post.std == 10.0

    def test_zero_strain_point_is_no_information(self):
        strains = np.array([STRAIN_1])
        stresses = np.array([STRESS_1])
        base = analytic_le_posterior(PRIOR_MEAN, PRIOR_STD, strains, stresses, NOISE_STD)
        padded = analytic_le_posterior(
            PRIOR_MEAN, PRIOR_STD, np.append(strains, 0.0), np.append(stresses, 0.123), NOISE_STD
        )
        assert padded.mean == base.mean
        assert padded.std == base.std

    def test_scale_strictly_decreases(self):
        rng = np.random.default_rng(5)
        strains = rng.uniform(1e-4, 2e-3, size=6)
        stresses = 210.0 * strains + 0.01 * rng.standard_normal(6)
        scales = []
        for k in range(1, 7):
            post = analytic_le_posterior(PRIOR_MEAN, PRIOR_STD, strains[:k], stresses[:k],
                                         NOISE_STD)
            scales.append(post.std)
        assert all(b < a for a, b in zip(scales, scales[1:]))

    def test_batch_equals_sequential(self):
        """Chaining posterior-into-prior gives the batch answer."""
        rng = np.random.default_rng(8)
        strains = rng.uniform(1e-4, 2e-3, size=5)
        stresses = 210.0 * strains + 0.01 * rng.standard_normal(5)
        batch = analytic_le_posterior(PRIOR_MEAN, PRIOR_STD, strains, stresses, NOISE_STD)
        mean, std = PRIOR_MEAN, PRIOR_STD
        for eps, sig in zip(strains, stresses):
            step = analytic_le_posterior(mean, std, [eps], [sig], NOISE_STD)
            mean, std = step.mean, step.std
        assert mean == pytest.approx(batch.mean, rel=1e-12)
        assert std == pytest.approx(batch.std, rel=1e-12)

    def test_truncation_warning_for_weak_posteriors(self):
        with pytest.warns(UserWarning, match="truncation"):
            analytic_le_posterior(10.0, 50.0, [], [], NOISE_STD)

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            analytic_le_posterior(PRIOR_MEAN, 0.0, [STRAIN_1], [STRESS_1], NOISE_STD)
        with pytest.raises(ConfigurationError):
            analytic_le_posterior(PRIOR_MEAN, PRIOR_STD, [STRAIN_1], [STRESS_1], 0.0)
        with pytest.raises(ConfigurationError):
            analytic_le_posterior(PRIOR_MEAN, PRIOR_STD, [1e-3, 2e-3], [0.2], NOISE_STD)


def _prior_le() -> TruncatedNormalPrior:
    return TruncatedNormalPrior(mean=[PRIOR_MEAN], covariance=[[PRIOR_STD**2]])


def _single_point_set() -> MeasurementSet:
    return MeasurementSet(
        strains=[STRAIN_1], stresses=[STRESS_1], noise=NoiseSpec(stress_std=NOISE_STD)
    )


class TestLogPosterior:
    def test_off_support_is_log_zero(self):
        target = LogPosterior(ModelKind.LINEAR_ELASTIC, _prior_le(), _single_point_set())
        assert target(np.array([-1.0])) == -np.inf
        assert target(np.array([np.nan])) == -np.inf

    def test_grid_argmax_matches_analytic_mean(self):
        """Brute-force maximization lands on the conjugate location."""
        target = LogPosterior(ModelKind.LINEAR_ELASTIC, _prior_le(), _single_point_set())
        grid = np.arange(100.0, 300.0, 0.01)
        values = np.array([target(np.array([g])) for g in grid])
        top = grid[int(np.argmax(values))]
        assert abs(top - _reference_posterior().mean) <= 0.01

    def test_no_data_equals_prior(self):
        prior = _prior_le()
        target = LogPosterior(ModelKind.LINEAR_ELASTIC, prior)
        for value in (0.0, 150.0, 212.6486):
            assert target(np.array([value])) == prior.log_density([value])

    def test_value_is_prior_plus_likelihood(self):
        prior = _prior_le()
        mset = _single_point_set()
        target = LogPosterior(ModelKind.LINEAR_ELASTIC, prior, mset)
        x = np.array([205.0])
        want = prior.log_density(x) + log_likelihood(
            ParameterVector(E=205.0), ModelKind.LINEAR_ELASTIC, mset
        )
        assert target(x) == pytest.approx(want, rel=1e-14)

    def test_pooled_sets_sum(self):
        """Several specimens pool by adding their log-likelihoods."""
        x_true = ParameterVector(E=210.0)
        grid = np.linspace(2e-4, 2e-3, 8)
        sets = [
            generate_single_noise(x_true, ModelKind.LINEAR_ELASTIC, grid, NOISE_STD, seed=s)
            for s in (0, 1, 2)
        ]
        prior = _prior_le()
        pooled = LogPosterior(ModelKind.LINEAR_ELASTIC, prior, sets)
        x = np.array([208.0])
        parts = sum(
            log_likelihood(ParameterVector(E=208.0), ModelKind.LINEAR_ELASTIC, s) for s in sets
        )
        assert pooled(x) == pytest.approx(prior.log_density(x) + parts, rel=1e-14)

    def test_pooled_mixed_regimes(self):
        """Stress-only and both-noise specimens can share one posterior."""
        x_true = ParameterVector(E=210.0)
        grid = np.linspace(2e-4, 2e-3, 6)
        single = generate_single_noise(x_true, ModelKind.LINEAR_ELASTIC, grid, NOISE_STD, seed=0)
        double = generate_double_noise(
            x_true, ModelKind.LINEAR_ELASTIC, grid, NOISE_STD, 1e-4, seed=1
        )
        target = LogPosterior(ModelKind.LINEAR_ELASTIC, _prior_le(), [single, double])
        assert np.isfinite(target(np.array([210.0])))

    def test_empty_sequence_rejected(self):
        with pytest.raises(ConfigurationError, match="prior-only"):
            LogPosterior(ModelKind.LINEAR_ELASTIC, _prior_le(), [])

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ConfigurationError):
            LogPosterior(ModelKind.PERFECT_PLASTICITY, _prior_le(), _single_point_set())

    def test_quadrature_misuse_rejected(self):
        with pytest.raises(ConfigurationError):
            LogPosterior(
                ModelKind.LINEAR_ELASTIC, _prior_le(), _single_point_set(), QuadratureSpec()
            )

    def test_implicit_double_gets_default_quadrature(self):
        x_true = ParameterVector(E=210.0, sigma_y0=0.25, H=2.0, n=0.5)
        grid = np.linspace(5e-4, 4e-3, 6)
        mset = generate_double_noise(
            x_true, ModelKind.NONLINEAR_HARDENING, grid, NOISE_STD, 1e-4, seed=3
        )
        prior = TruncatedNormalPrior(
            mean=[200.0, 0.29, 2.5, 0.57],
            covariance=np.diag([2500.0, 2.7778e-4, 0.1111, 0.0025]),
        )
        bare = LogPosterior(ModelKind.NONLINEAR_HARDENING, prior, mset)
        explicit = LogPosterior(ModelKind.NONLINEAR_HARDENING, prior, mset, QuadratureSpec())
        assert bare.quadrature == QuadratureSpec()
        point = x_true.to_array()
        assert bare(point) == explicit(point)

    def test_grid_argmax_perfect_plasticity(self):
        """2-D grid maximization recovers exact-data truth for LE-PP."""
        x_true = ParameterVector(E=210.0, sigma_y0=0.25)
        grid = np.linspace(2.4e-4, 2.88e-3, 12)
        exact = stress(grid, x_true, ModelKind.PERFECT_PLASTICITY)
        mset = MeasurementSet(strains=grid, stresses=exact, noise=NoiseSpec(stress_std=NOISE_STD))
        prior = TruncatedNormalPrior(
            mean=[200.0, 0.29], covariance=np.diag([2500.0, 2.7778e-4])
        )
        target = LogPosterior(ModelKind.PERFECT_PLASTICITY, prior, mset)
        from scipy.optimize import minimize

        mode = minimize(
            lambda v: -target(v), [210.0, 0.25], method="Nelder-Mead",
            options={"xatol": 1e-8, "fatol": 1e-12},
        ).x
        es = np.linspace(200.0, 220.0, 41)
        sys_ = np.linspace(0.24, 0.26, 41)
        best, best_val = None, -np.inf
        for e in es:
            for sy in sys_:
                v = target(np.array([e, sy]))
                if v > best_val:
                    best, best_val = (e, sy), v
        # Grid search lands within one cell of the continuous optimum.
        assert abs(best[0] - mode[0]) <= 0.5
        assert abs(best[1] - mode[1]) <= 5e-4
        # The prior pulls the mode off the truth, but only slightly.
        assert abs(mode[0] - 210.0) <= 2.0
        assert abs(mode[1] - 0.25) <= 3e-3
