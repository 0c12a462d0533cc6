"""Li-ion degradation math: calendar aging, cycle aging, SEI fade, DIF.

The fade pipeline is

    dC_cal   = k1 * exp(-Ea/(R*T)) * SoC^b * t_days
    dC_cycle = k2 * DoD^d * C^c * exp(-Ea/(R*T)) * N
    D_L      = dC_cal + dC_cycle
    fade     = 1 - alpha_sei*exp(-k_sei*D_L) - (1-alpha_sei)*exp(-D_L)

All dC values are fractions of rated capacity, so D_L is dimensionless and
fade is bounded in [0, 1).  All functions are pure and side-effect free.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .exceptions import ConfigError

# Universal gas constant (J/(mol*K))
R_GAS = 8.314

# Pack cells are only rated for -20C..+40C; outside that we warn, not fail.
OPERABLE_TEMP_MIN_K = 253.0
OPERABLE_TEMP_MAX_K = 313.0


@dataclass(frozen=True)
class DegradationParams:
    """Calibration constants and exponents of the fade pipeline.

    k1, k2 are dimensionless calibration constants scaling per-day and
    per-cycle fractional fade.  alpha_sei is the capacity share lost to SEI
    film formation, k_sei the film formation constant.
    """

    k1: float
    k2: float
    ea_j_per_mol: float
    b: float                    # SoC exponent
    c: float                    # C-rate exponent
    d: float                    # DoD exponent
    alpha_sei: float
    k_sei: float
    r_gas: float = R_GAS

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError(f"k1 and k2 must be > 0, got k1={self.k1}, k2={self.k2}")
        if self.ea_j_per_mol <= 0:
            raise ValueError(f"activation energy must be > 0, got {self.ea_j_per_mol}")
        if self.r_gas != R_GAS:
            raise ValueError(f"gas constant is fixed at {R_GAS}, got {self.r_gas}")
        if self.b < 0 or self.c < 0 or self.d < 0:
            raise ValueError("exponents b, c, d must be >= 0")
        if not 0.0 <= self.alpha_sei <= 1.0:
            raise ValueError(f"alpha_sei must be in [0, 1], got {self.alpha_sei}")
        if self.k_sei <= 0:
            raise ValueError(f"k_sei must be > 0, got {self.k_sei}")


@dataclass(frozen=True)
class ThermalProfile:
    """Internal pack temperature in each orbital phase (K)."""

    t_sun_k: float
    t_eclipse_k: float

    def __post_init__(self):
        if self.t_sun_k <= 0 or self.t_eclipse_k <= 0:
            raise ValueError("temperatures must be strictly positive kelvin")
        for name, t in (("t_sun_k", self.t_sun_k), ("t_eclipse_k", self.t_eclipse_k)):
            if not OPERABLE_TEMP_MIN_K <= t <= OPERABLE_TEMP_MAX_K:
                warnings.warn(
                    f"{name}={t} K is outside the pack's operable range "
                    f"[{OPERABLE_TEMP_MIN_K}, {OPERABLE_TEMP_MAX_K}] K",
                    stacklevel=2,
                )


@dataclass(frozen=True)
class CycleStress:
    """Stress descriptor of one charge-discharge cycle."""

    dod: float              # depth of discharge, fraction of capacity
    c_rate: float           # discharge rate, current / rated capacity
    temperature_k: float

    def __post_init__(self):
        if not 0.0 <= self.dod <= 1.0:
            raise ValueError(f"dod must be in [0, 1], got {self.dod}")
        if self.c_rate < 0:
            raise ValueError(f"c_rate must be >= 0, got {self.c_rate}")
        if self.temperature_k <= 0:
            raise ValueError(f"temperature must be > 0 K, got {self.temperature_k}")


@dataclass
class BatteryState:
    """Mutable per-pack bookkeeping the simulation advances orbit by orbit.

    fade_fraction is the nonlinear (SEI) total fade; d_linear the
    accumulated linear degradation feeding it.  Both are non-decreasing
    over a run, so effective capacity is non-increasing.
    """

    soc: float
    capacity_rated_ah: float
    voltage_nominal_v: float
    fade_fraction: float = 0.0
    d_linear: float = 0.0
    cycles_completed: float = 0.0
    calendar_days: float = 0.0
    dc_cal_total: float = 0.0
    dc_cycle_total: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.soc <= 1.0:
            raise ValueError(f"soc must be in [0, 1], got {self.soc}")
        if self.capacity_rated_ah <= 0 or self.voltage_nominal_v <= 0:
            raise ValueError("rated capacity and nominal voltage must be > 0")
        if not 0.0 <= self.fade_fraction <= 1.0:
            raise ValueError(f"fade_fraction must be in [0, 1], got {self.fade_fraction}")
        if self.d_linear < 0 or self.cycles_completed < 0 or self.calendar_days < 0:
            raise ValueError("d_linear, cycles_completed, calendar_days must be >= 0")

    @property
    def effective_capacity_ah(self) -> float:
        return self.capacity_rated_ah * (1.0 - self.fade_fraction)

    @property
    def capacity_rated_j(self) -> float:
        return self.capacity_rated_ah * self.voltage_nominal_v * 3600.0

    @property
    def effective_capacity_j(self) -> float:
        return self.effective_capacity_ah * self.voltage_nominal_v * 3600.0


def arrhenius_factor(ea_j_per_mol: float, temperature_k: float) -> float:
    """Temperature scaling exp(-Ea/(R*T)) of the degradation rate.

    Strictly increasing in temperature for Ea > 0; equals 1 at Ea = 0.
    """
    if temperature_k <= 0:
        raise ValueError(f"temperature must be > 0 K, got {temperature_k}")
    if ea_j_per_mol < 0:
        raise ValueError(f"activation energy must be >= 0, got {ea_j_per_mol}")
    return math.exp(-ea_j_per_mol / (R_GAS * temperature_k))


def calendar_aging(
    params: DegradationParams, temperature_k: float, soc: float, t_days: float
) -> float:
    """Fractional capacity loss from resting t_days at the given T and SoC.

    Linear in t_days, monotone non-decreasing in SoC and temperature.
    """
    if t_days < 0:
        raise ValueError(f"t_days must be >= 0, got {t_days}")
    if not 0.0 <= soc <= 1.0:
        raise ValueError(f"soc must be in [0, 1], got {soc}")
    arr = arrhenius_factor(params.ea_j_per_mol, temperature_k)
    return params.k1 * arr * soc**params.b * t_days


def cycle_aging(params: DegradationParams, stress: CycleStress, n_cycles: float) -> float:
    """Fractional capacity loss from n_cycles at the given cycle stress.

    Zero when dod == 0 or n_cycles == 0; linear in n_cycles.
    """
    if n_cycles < 0:
        raise ValueError(f"n_cycles must be >= 0, got {n_cycles}")
    arr = arrhenius_factor(params.ea_j_per_mol, stress.temperature_k)
    return params.k2 * stress.dod**params.d * stress.c_rate**params.c * arr * n_cycles


def linear_degradation(dc_cal: float, dc_cycle: float) -> float:
    """Total linear degradation D_L: the sum of the two aging contributions."""
    if dc_cal < 0 or dc_cycle < 0:
        raise ValueError("degradation contributions must be >= 0")
    return dc_cal + dc_cycle


def sei_capacity_fade(params: DegradationParams, d_linear: float) -> float:
    """Nonlinear irreversible capacity fade from SEI film growth.

    Equals 0 at d_linear = 0, strictly increases with d_linear, and
    approaches 1 as d_linear grows without bound.
    """
    if d_linear < 0:
        raise ValueError(f"d_linear must be >= 0, got {d_linear}")
    a = params.alpha_sei
    return 1.0 - a * math.exp(-params.k_sei * d_linear) - (1.0 - a) * math.exp(-d_linear)


def degradation_impact_factor(
    params: DegradationParams,
    stress_if_tx: CycleStress,
    stress_if_idle: CycleStress,
    dif_ref: float,
) -> float:
    """Score in [0, 1] of the extra cycle fade one transmission would cause.

    The single-cycle fade difference between the transmit and idle stress
    is normalized by dif_ref and clamped.  0 means transmitting adds no
    cycle stress; 1 means it reaches the configured worst-case envelope.
    """
    if dif_ref <= 0:
        raise ConfigError(f"dif_ref must be > 0, got {dif_ref}")
    extra = cycle_aging(params, stress_if_tx, 1.0) - cycle_aging(params, stress_if_idle, 1.0)
    return min(max(extra / dif_ref, 0.0), 1.0)
