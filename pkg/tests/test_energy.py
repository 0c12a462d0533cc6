"""Stored-energy balance, EWMA estimator, and availability projections."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from leolora.energy import (
    HarvestModel,
    NodeEnergyState,
    PowerProfile,
    energy_step,
    estimate_available_energy,
    ewma_update,
)
from leolora.exceptions import ConfigError, ContractError
from leolora.orbit import ECLIPSE, SUN, ForecastWindow

PROFILE = PowerProfile(e_cons_tx_j=5.0, e_sleep_j=1.0)


def fresh_state(phi=100.0, phi_max=200.0, phi_min=10.0, e_critical=20.0):
    return NodeEnergyState(phi_j=phi, phi_max_j=phi_max, phi_min_j=phi_min,
                           e_critical_j=e_critical)


class TestEnergyStep:
    def test_sleep_only_drains_sleep_energy(self):
        state = fresh_state()
        step = energy_step(state, 0, 0, 0.0, PROFILE)
        assert step.phi_after == pytest.approx(99.0)
        assert state.x_history == [0] and state.y_history == [0]

    def test_harvest_and_transmit_one_step(self):
        state = fresh_state()
        step = energy_step(state, 1, 1, 10.0, PROFILE)
        assert step.phi_after == pytest.approx(105.0)

    def test_zero_everything_is_identity(self):
        profile = PowerProfile(e_cons_tx_j=1e-12, e_sleep_j=0.0)
        state = fresh_state()
        step = energy_step(state, 0, 0, 0.0, profile)
        assert step.phi_after == 100.0

    def test_harvest_in_eclipse_is_contract_violation(self):
        state = fresh_state()
        with pytest.raises(ContractError):
            energy_step(state, 0, 1, 5.0, PROFILE, phase=ECLIPSE)

    def test_zero_harvest_in_eclipse_is_fine(self):
        state = fresh_state()
        energy_step(state, 0, 0, 0.0, PROFILE, phase=ECLIPSE)

    def test_brownout_clamps_at_zero_and_reports(self):
        state = fresh_state(phi=0.5)
        step = energy_step(state, 0, 0, 0.0, PROFILE)
        assert step.brownout
        assert state.phi_j == 0.0
        assert step.clamp_adjustment_j == pytest.approx(0.5)

    def test_clamp_at_capacity(self):
        state = fresh_state(phi=199.5)
        step = energy_step(state, 0, 1, 10.0, PROFILE)
        assert step.clamped_high
        assert state.phi_j == 200.0
        assert step.clamp_adjustment_j == pytest.approx(-8.5)

    def test_bad_decision_variables_rejected(self):
        with pytest.raises(ValueError):
            energy_step(fresh_state(), 2, 0, 0.0, PROFILE)

    @given(
        phi=st.floats(0.0, 200.0),
        x=st.sampled_from([0, 1]),
        y=st.sampled_from([0, 1]),
        e_g=st.floats(0.0, 50.0),
    )
    def test_phi_stays_in_bounds_and_histories_are_binary(self, phi, x, y, e_g):
        state = fresh_state(phi=phi)
        step = energy_step(state, x, y, e_g, PROFILE)
        assert 0.0 <= state.phi_j <= state.phi_max_j
        assert set(state.x_history) <= {0, 1}
        assert set(state.y_history) <= {0, 1}
        # ledger identity for the single step
        assert step.phi_after == pytest.approx(
            step.phi_before + step.delta_requested + step.clamp_adjustment_j, abs=1e-12
        )


class TestEwma:
    def test_full_weight_on_new_sample(self):
        assert ewma_update(1.0, 10.0, 20.0) == 10.0

    def test_full_weight_on_history(self):
        assert ewma_update(0.0, 10.0, 20.0) == 20.0

    def test_reference_step(self):
        assert ewma_update(0.3, 10.0, 20.0) == pytest.approx(17.0, rel=1e-15)

    def test_beta_out_of_range_rejected(self):
        with pytest.raises(ConfigError):
            ewma_update(1.5, 10.0, 20.0)
        with pytest.raises(ConfigError):
            ewma_update(-0.1, 10.0, 20.0)

    def test_geometric_convergence(self):
        beta, target, est = 0.05, 10.0, 20.0
        for t in range(1, 101):
            est = ewma_update(beta, target, est)
            expected = (1.0 - beta) ** t * 10.0
            assert abs(est - target) == pytest.approx(expected, rel=1e-12)

    @given(
        beta=st.floats(0.0, 1.0),
        prev=st.floats(0.0, 1e6),
        sample=st.floats(0.0, 1e6),
    )
    def test_output_between_inputs(self, beta, prev, sample):
        out = ewma_update(beta, sample, prev)
        assert min(prev, sample) - 1e-9 <= out <= max(prev, sample) + 1e-9


class TestEstimateAvailableEnergy:
    HARVEST = HarvestModel(e_g_sun_j_per_slot=2.0, charge_rate_limit_j_per_slot=10.0)

    def test_eclipse_with_zero_drain_returns_phi(self):
        profile = PowerProfile(e_cons_tx_j=1.0, e_sleep_j=0.0)
        window = ForecastWindow("w", 0.0, 400.0, ECLIPSE, "gs")
        state = fresh_state(phi=50.0)
        got = estimate_available_energy(state, window, self.HARVEST, profile, slot_s=40.0)
        assert got == 50.0

    def test_sun_projection(self):
        profile = PowerProfile(e_cons_tx_j=1.0, e_sleep_j=0.5)
        window = ForecastWindow("w", 0.0, 400.0, SUN, "gs")  # 10 slots
        state = fresh_state(phi=50.0)
        got = estimate_available_energy(state, window, self.HARVEST, profile, slot_s=40.0)
        assert got == pytest.approx(50.0 + 20.0 - 5.0)

    def test_projection_clamped_at_capacity(self):
        profile = PowerProfile(e_cons_tx_j=1.0, e_sleep_j=0.0)
        window = ForecastWindow("w", 0.0, 1800.0, SUN, "gs")
        state = fresh_state(phi=195.0)
        got = estimate_available_energy(state, window, self.HARVEST, profile, slot_s=40.0)
        assert got == 200.0

    def test_reservations_reduce_estimate(self):
        profile = PowerProfile(e_cons_tx_j=1.0, e_sleep_j=0.0)
        window = ForecastWindow("w", 0.0, 400.0, ECLIPSE, "gs")
        state = fresh_state(phi=50.0)
        state.reserved_j = 7.0
        got = estimate_available_energy(state, window, self.HARVEST, profile, slot_s=40.0)
        assert got == 43.0

    def test_charge_rate_limit_caps_harvest(self):
        harvest = HarvestModel(e_g_sun_j_per_slot=100.0, charge_rate_limit_j_per_slot=3.0)
        assert harvest.slot_harvest(1.0) == 3.0
        assert harvest.slot_harvest(0.5) == 3.0


class TestTypes:
    def test_power_profile_ordering_enforced(self):
        with pytest.raises(ValueError):
            PowerProfile(e_cons_tx_j=1.0, e_sleep_j=2.0)
        with pytest.raises(ValueError):
            PowerProfile(e_cons_tx_j=1.0, e_sleep_j=-0.1)

    def test_state_bounds_enforced(self):
        with pytest.raises(ValueError):
            NodeEnergyState(phi_j=300.0, phi_max_j=200.0, phi_min_j=10.0, e_critical_j=0.0)
        with pytest.raises(ValueError):
            NodeEnergyState(phi_j=100.0, phi_max_j=200.0, phi_min_j=200.0, e_critical_j=0.0)

    def test_negative_harvest_rejected(self):
        with pytest.raises(ValueError):
            HarvestModel(e_g_sun_j_per_slot=-1.0, charge_rate_limit_j_per_slot=1.0)
