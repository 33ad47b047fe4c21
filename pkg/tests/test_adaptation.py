import math

import numpy as np
import pytest

from plateau_mtm.adaptation import (
    AdaptationConfig,
    AdaptationState,
    adaptation_gate,
    adaptation_probability,
    containment_filter,
    maybe_adapt,
    plateau_width_update,
)


class TestAdaptationProbability:
    def test_first_iteration(self):
        assert adaptation_probability(1) == 1.0

    def test_large_n_sqrt_branch(self):
        assert adaptation_probability(10_000) == pytest.approx(0.01)

    def test_monotone_non_increasing(self):
        prev = 1.0
        for n in range(1, 100_001):
            p = adaptation_probability(n)
            assert p <= prev + 1e-15
            prev = p

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            adaptation_probability(0)


class TestWidthUpdate:
    CFG = AdaptationConfig(interval=50, eta1=0.4, eta2=0.4, schedule="always")

    def test_innermost_over_selection_halves(self):
        assert plateau_width_update(1.0, 21, 0, self.CFG) == 0.5

    def test_threshold_is_strict(self):
        assert plateau_width_update(1.0, 20, 0, self.CFG) == 1.0

    def test_both_branches_cancel(self):
        assert plateau_width_update(1.0, 21, 21, self.CFG) == 1.0

    def test_outermost_over_selection_doubles(self):
        assert plateau_width_update(1.0, 0, 21, self.CFG) == 2.0

    def test_clamped_at_bounds(self):
        cfg = AdaptationConfig(interval=50, schedule="always",
                               upsilon_min=1e-6, upsilon_max=1e6)
        assert plateau_width_update(1e-6, 21, 0, cfg) == 1e-6
        assert plateau_width_update(1e6, 0, 21, cfg) == 1e6


class TestMaybeAdapt:
    def test_fires_only_on_interval_boundaries(self):
        cfg = AdaptationConfig(interval=50, schedule="always")
        state = AdaptationState(upsilon=np.ones(2))
        state.counts_first[:] = 30
        rng = np.random.default_rng(0)
        state, events = maybe_adapt(rng, state, cfg, 49)
        assert events == [] and np.all(state.upsilon == 1.0)
        assert np.all(state.counts_first == 30)  # no reset when gate closed
        state, events = maybe_adapt(rng, state, cfg, 50)
        assert np.all(state.upsilon == 0.5)
        assert [e[:2] for e in events] == [(50, 0), (50, 1)]
        assert np.all(state.counts_first == 0)

    def test_counters_reset_even_without_width_change(self):
        cfg = AdaptationConfig(interval=10, schedule="always")
        state = AdaptationState(upsilon=np.ones(1))
        state.counts_first[0] = 2  # below threshold
        state, events = maybe_adapt(np.random.default_rng(1), state, cfg, 10)
        assert events == []
        assert state.counts_first[0] == 0

    def test_off_schedule_never_fires(self):
        cfg = AdaptationConfig(interval=10, schedule="off")
        state = AdaptationState(upsilon=np.ones(1))
        state.counts_first[0] = 100
        state, events = maybe_adapt(np.random.default_rng(2), state, cfg, 10)
        assert events == [] and state.upsilon[0] == 1.0

    def test_burn_in_only_gates_on_iteration(self):
        cfg = AdaptationConfig(interval=10, schedule="burn_in_only",
                               burn_in_iterations=20)
        rng = np.random.default_rng(3)
        # P_10 and P_20 are ~0.91 / ~0.83, so firing is near certain early
        fired_early = sum(
            adaptation_gate(np.random.default_rng(s), cfg, 10) for s in range(200)
        )
        assert fired_early > 150
        assert not any(
            adaptation_gate(np.random.default_rng(s), cfg, 30) for s in range(200)
        )

    def test_diminishing_gate_frequency(self):
        cfg = AdaptationConfig(interval=50, schedule="diminishing")
        n = 400
        p = adaptation_probability(n)
        fired = sum(
            adaptation_gate(np.random.default_rng(s), cfg, n) for s in range(2000)
        )
        se = math.sqrt(p * (1 - p) / 2000)
        assert abs(fired / 2000 - p) < 4 * se

    def test_expected_adaptation_count_tail_window(self):
        # gate-only simulation of iterations 10000..20000 with L=50; the
        # mean number of fires over 100 seeded runs must match the exact
        # expectation sum(P_n)/.. and stay inside the coarse 2.9 +- 3*sqrt(2.9)
        # band
        cfg = AdaptationConfig(interval=50, schedule="diminishing")
        boundaries = range(10_050, 20_001, 50)
        expected = sum(adaptation_probability(n) for n in boundaries)
        counts = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            counts.append(sum(adaptation_gate(rng, cfg, n) for n in boundaries))
        observed = np.mean(counts)
        se = math.sqrt(expected / 100)  # Poisson-ish
        assert abs(observed - expected) < 4 * se
        assert observed < 2.9 + 3 * math.sqrt(2.9)

    def test_per_component_gate_draws_independently(self):
        cfg = AdaptationConfig(interval=50, schedule="diminishing",
                               per_component_gate=True)
        state = AdaptationState(upsilon=np.ones(2))
        state.counts_first[:] = 30
        n = 40_000  # P_n = 0.005: components rarely fire together
        both = 0
        exactly_one = 0
        for seed in range(4000):
            st = AdaptationState(upsilon=np.ones(2))
            st.counts_first[:] = 30
            st, events = maybe_adapt(np.random.default_rng(seed), st, cfg, n)
            changed = int(st.upsilon[0] != 1.0) + int(st.upsilon[1] != 1.0)
            both += changed == 2
            exactly_one += changed == 1
        assert exactly_one > 0  # a shared gate could never produce this
        assert both < exactly_one

    def test_clamp_keeps_widths_in_bounds(self):
        cfg = AdaptationConfig(interval=10, schedule="always",
                               upsilon_min=0.25, upsilon_max=4.0)
        state = AdaptationState(upsilon=np.array([0.25, 4.0]))
        state.counts_first[0] = 100  # wants to halve
        state.counts_last[1] = 100  # wants to double
        state, events = maybe_adapt(np.random.default_rng(0), state, cfg, 10)
        assert np.all(state.upsilon == [0.25, 4.0])
        assert events == []


class TestContainment:
    def test_inside(self):
        assert containment_filter(np.zeros(3), -1e6, 1e6)

    def test_one_component_outside(self):
        y = np.zeros(3)
        y[1] = 1e6 + 1
        assert not containment_filter(y, -1e6, 1e6)

    def test_boundary_inclusive(self):
        assert containment_filter(np.array([-1e6, 1e6]), -1e6, 1e6)


class TestConfigValidation:
    def test_bad_interval(self):
        with pytest.raises(ValueError):
            AdaptationConfig(interval=0)

    def test_bad_eta(self):
        with pytest.raises(ValueError):
            AdaptationConfig(eta1=1.5)

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            AdaptationConfig(upsilon_min=1.0, upsilon_max=0.5)

    def test_bad_schedule(self):
        with pytest.raises(ValueError):
            AdaptationConfig(schedule="sometimes")
