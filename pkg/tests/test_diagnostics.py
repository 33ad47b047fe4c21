import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.signal import lfilter

import oracles
from plateau_mtm.diagnostics import (
    act_initial_sequence,
    asjd,
    chisq_log_pdf,
    chisq_quantile,
    first_hitting_time,
    running_coverage_component,
    running_coverage_joint,
)


def ar1_series(phi: float, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(n)
    x = lfilter([1.0], [1.0, -phi], eps)
    x[0] = rng.standard_normal() * math.sqrt(1.0 / (1.0 - phi * phi))
    return x


class TestChisqQuantile:
    def test_reference_values_against_integration_oracle(self):
        for p, df, expected in [(0.99, 1, 6.6349), (0.99, 5, 15.0863),
                                (0.95, 2, 5.9915)]:
            z = chisq_quantile(p, df)
            assert z == pytest.approx(expected, abs=1e-3)
            assert z == pytest.approx(oracles.chisq_quantile_oracle(p, df), abs=1e-8)

    def test_df2_closed_form(self):
        assert chisq_quantile(0.95, 2) == pytest.approx(-2.0 * math.log(0.05),
                                                        abs=1e-12)

    def test_round_trip_by_quadrature(self):
        for p, df in [(0.9, 1), (0.99, 5), (0.5, 3), (0.975, 10)]:
            z = chisq_quantile(p, df)
            upper, _ = quad(lambda t: math.exp(chisq_log_pdf(t, df)), z, math.inf,
                            limit=300)
            assert upper == pytest.approx(1.0 - p, abs=1e-6)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            chisq_quantile(0.0, 1)
        with pytest.raises(ValueError):
            chisq_quantile(1.0, 1)
        with pytest.raises(ValueError):
            chisq_quantile(0.5, 0)


class TestActInitialSequence:
    def test_iid_series(self):
        rng = np.random.default_rng(0)
        series = rng.standard_normal(1_000_000)
        assert act_initial_sequence(series) == pytest.approx(1.0, abs=0.05)

    def test_ar1_with_known_variance(self):
        phi = 0.5
        series = ar1_series(phi, 1_000_000, seed=1)
        process_var = 1.0 / (1.0 - phi * phi)
        est = act_initial_sequence(series, variance=process_var)
        assert est == pytest.approx((1 + phi) / (1 - phi), abs=0.1)

    def test_alternating_series_dips_below_one(self):
        rng = np.random.default_rng(2)
        series = np.tile([1.0, -1.0], 5000) + 1e-6 * rng.standard_normal(10_000)
        assert act_initial_sequence(series) < 1.0

    def test_degenerate_series_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            act_initial_sequence(np.zeros(100))

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            act_initial_sequence(np.arange(5.0))

    def test_affine_invariance_without_variance(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            series = ar1_series(0.3, 400, seed=int(rng.integers(1 << 30)))
            a = float(rng.uniform(0.1, 10))
            b = float(rng.normal(0, 5))
            assert act_initial_sequence(a * series + b) == pytest.approx(
                act_initial_sequence(series), rel=1e-9
            )

    def test_halves_consistency(self):
        series = ar1_series(0.5, 2_000_000, seed=4)
        first = act_initial_sequence(series[:1_000_000])
        second = act_initial_sequence(series[1_000_000:])
        assert abs(first - second) / first < 0.10


class TestAsjd:
    def test_constant_series(self):
        assert asjd(np.full(50, 3.3)) == 0.0

    def test_alternating(self):
        assert asjd(np.array([0.0, 1.0, 0.0, 1.0])) == 1.0

    def test_iid_normal(self):
        rng = np.random.default_rng(5)
        series = rng.standard_normal(1_000_000)
        assert asjd(series) == pytest.approx(2.0, abs=0.02)

    def test_affine_scaling(self):
        rng = np.random.default_rng(6)
        series = rng.standard_normal(1000)
        a, b = 2.5, -7.0
        assert asjd(a * series + b) == pytest.approx(a * a * asjd(series), rel=1e-12)

    def test_too_short(self):
        with pytest.raises(ValueError):
            asjd(np.array([1.0]))


class TestRunningCoverage:
    def test_all_states_at_origin(self):
        c = running_coverage_component(np.zeros(100), 1.0, 6.63)
        assert np.all(c == 0.0)

    def test_single_exceedance_denominator_convention(self):
        # one exceedance among X_0..X_100: C_100 = 1/100 with the printed
        # sum-to-n-over-n convention
        series = np.zeros(101)
        series[37] = 10.0
        c = running_coverage_component(series, 1.0, 6.63)
        assert len(c) == 100
        assert c[-1] == pytest.approx(1.0 / 100.0)

    def test_initial_state_counts(self):
        series = np.zeros(11)
        series[0] = 10.0
        c = running_coverage_component(series, 1.0, 6.63)
        assert c[0] == pytest.approx(1.0)  # (I0 + I1)/1 with I1 = 0

    def test_iid_matches_nominal_level(self):
        rng = np.random.default_rng(7)
        sigma2 = 4.0
        n = 100_000
        series = rng.normal(0, math.sqrt(sigma2), size=n + 1)
        z1 = chisq_quantile(0.99, 1)
        c = running_coverage_component(series, sigma2, z1)
        se = math.sqrt(0.01 * 0.99 / n)
        assert abs(c[-1] - 0.01) < 3 * se

    def test_joint_iid_matches_nominal_level(self):
        rng = np.random.default_rng(8)
        cov = np.array([[0.25, 1.875], [1.875, 25.0]])
        n = 100_000
        states = rng.multivariate_normal(np.zeros(2), cov, size=n + 1)
        z2 = chisq_quantile(0.99, 2)
        d = running_coverage_joint(states, cov, z2)
        se = math.sqrt(0.01 * 0.99 / n)
        assert abs(d[-1] - 0.01) < 3 * se

    def test_joint_reduces_to_component_in_1d(self):
        rng = np.random.default_rng(9)
        series = rng.normal(0, 2.0, size=500)
        z = chisq_quantile(0.99, 1)
        c = running_coverage_component(series, 4.0, z)
        d = running_coverage_joint(series[:, None], np.array([[4.0]]), z)
        assert np.allclose(c, d)

    def test_non_pd_covariance_rejected(self):
        with pytest.raises(np.linalg.LinAlgError):
            running_coverage_joint(np.zeros((10, 2)),
                                   np.array([[1.0, 2.0], [2.0, 1.0]]), 5.0)

    def test_invalid_sigma2(self):
        with pytest.raises(ValueError):
            running_coverage_component(np.zeros(10), 0.0, 1.0)


class TestFirstHittingTime:
    COV = np.array([[0.25, 1.875], [1.875, 25.0]])

    def test_start_inside(self):
        states = np.zeros((5, 2))
        assert first_hitting_time(states, self.COV, 5.99) == 0

    def test_never_entering(self):
        states = np.full((50, 2), 50.0)
        assert first_hitting_time(states, self.COV, 5.99) is None

    def test_first_index_returned(self):
        states = np.full((10, 2), 50.0)
        states[6] = 0.0
        states[8] = 0.0
        assert first_hitting_time(states, self.COV, 5.99) == 6
