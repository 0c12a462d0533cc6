"""Per-node stored-energy balance, solar harvest, and the EWMA estimator.

The slot balance is

    phi[t] = phi[t-1] + y[t]*E_g[t] - x[t]*E_cons - (1 - x[t])*E_sleep

with phi clamped to [0, phi_max].  A clamp at zero is a brownout; every
clamp is reported so the run-level ledger can still be audited exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .exceptions import ConfigError, ContractError
from .orbit import ECLIPSE, SUN, ForecastWindow

DEFAULT_SLOT_S = 40.0


@dataclass
class NodeEnergyState:
    """Stored energy and decision history for one node.

    reserved_j is energy provisionally debited for packets already
    scheduled but not yet transmitted; availability estimates subtract it.
    """

    phi_j: float
    phi_max_j: float
    phi_min_j: float
    e_critical_j: float
    ewma_estimate_j: float = 0.0
    reserved_j: float = 0.0
    x_history: list[int] = field(default_factory=list)
    y_history: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.phi_j <= self.phi_max_j:
            raise ValueError(
                f"phi must be in [0, phi_max], got {self.phi_j} with max {self.phi_max_j}"
            )
        if not self.phi_min_j < self.phi_max_j:
            raise ValueError(
                f"phi_min must be < phi_max, got {self.phi_min_j} >= {self.phi_max_j}"
            )
        if self.e_critical_j < 0:
            raise ValueError(f"e_critical must be >= 0, got {self.e_critical_j}")
        if self.ewma_estimate_j < 0 or self.reserved_j < 0:
            raise ValueError("ewma estimate and reservation must be >= 0")

    @property
    def soc(self) -> float:
        return self.phi_j / self.phi_max_j


@dataclass(frozen=True)
class HarvestModel:
    """Solar input per slot: nonzero in sunlight, exactly zero in eclipse."""

    e_g_sun_j_per_slot: float
    charge_rate_limit_j_per_slot: float

    def __post_init__(self):
        if self.e_g_sun_j_per_slot < 0:
            raise ValueError(f"harvest must be >= 0, got {self.e_g_sun_j_per_slot}")
        if self.charge_rate_limit_j_per_slot < 0:
            raise ValueError("charge rate limit must be >= 0")

    def slot_harvest(self, sun_fraction: float) -> float:
        """Usable harvest for a slot with the given sunlit fraction."""
        if not 0.0 <= sun_fraction <= 1.0:
            raise ValueError(f"sun fraction must be in [0, 1], got {sun_fraction}")
        return min(self.e_g_sun_j_per_slot * sun_fraction, self.charge_rate_limit_j_per_slot)


@dataclass(frozen=True)
class PowerProfile:
    """Energy drawn per slot in each operating mode."""

    e_cons_tx_j: float
    e_sleep_j: float

    def __post_init__(self):
        if not self.e_cons_tx_j > self.e_sleep_j >= 0:
            raise ValueError(
                f"need e_cons_tx > e_sleep >= 0, got {self.e_cons_tx_j}, {self.e_sleep_j}"
            )


@dataclass(frozen=True)
class EnergyStep:
    """Outcome of one slot update, with the clamp audit trail."""

    phi_before: float
    phi_after: float
    delta_requested: float      # raw balance before clamping
    clamp_adjustment_j: float   # phi_after - (phi_before + delta_requested)
    brownout: bool
    clamped_high: bool


def energy_step(
    state: NodeEnergyState,
    x: int,
    y: int,
    e_g_j: float,
    profile: PowerProfile,
    phase: str = SUN,
) -> EnergyStep:
    """Advance phi by one slot and record the decision variables.

    Raises ContractError if harvest is claimed during eclipse.  A brownout
    (clamp at zero) is reported to the caller, which must force the node to
    sleep for the following slot.
    """
    if x not in (0, 1) or y not in (0, 1):
        raise ValueError(f"decision variables must be 0 or 1, got x={x}, y={y}")
    if e_g_j < 0:
        raise ValueError(f"harvest must be >= 0, got {e_g_j}")
    if phase == ECLIPSE and e_g_j > 0:
        raise ContractError(f"harvest {e_g_j} J claimed during eclipse")

    phi_before = state.phi_j
    delta = y * e_g_j - x * profile.e_cons_tx_j - (1 - x) * profile.e_sleep_j
    raw = phi_before + delta
    phi_after = min(max(raw, 0.0), state.phi_max_j)

    state.phi_j = phi_after
    state.x_history.append(x)
    state.y_history.append(y)

    return EnergyStep(
        phi_before=phi_before,
        phi_after=phi_after,
        delta_requested=delta,
        clamp_adjustment_j=phi_after - raw,
        brownout=raw < 0.0,
        clamped_high=raw > state.phi_max_j,
    )


def ewma_update(beta: float, e_cons_prev_j: float, ewma_prev_j: float) -> float:
    """Exponentially weighted estimate giving weight beta to the newest sample."""
    if not 0.0 <= beta <= 1.0:
        raise ConfigError(f"beta must be in [0, 1], got {beta}")
    if e_cons_prev_j < 0 or ewma_prev_j < 0:
        raise ValueError("energy inputs must be >= 0")
    return beta * e_cons_prev_j + (1.0 - beta) * ewma_prev_j


def estimate_available_energy(
    state: NodeEnergyState,
    window: ForecastWindow,
    harvest: HarvestModel,
    profile: PowerProfile,
    slot_s: float = DEFAULT_SLOT_S,
) -> float:
    """Projected energy on hand across the window, capped at phi_max.

    Sun windows add the projected harvest and subtract the sleep drain;
    eclipse windows subtract the sleep drain only.  Energy already reserved
    for scheduled transmissions is excluded.
    """
    if slot_s <= 0:
        raise ValueError(f"slot length must be > 0, got {slot_s}")
    n_slots = int(window.duration // slot_s)
    base = state.phi_j - state.reserved_j
    if window.phase == SUN:
        estimate = base + n_slots * harvest.slot_harvest(1.0) - n_slots * profile.e_sleep_j
    else:
        estimate = base - n_slots * profile.e_sleep_j
    return min(estimate, state.phi_max_j)
