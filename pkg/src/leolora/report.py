"""Node battery-usage summaries and their compact uplink encoding.

Nodes do not run the fade pipeline themselves; they periodically summarize
battery usage and the gateway computes degradation for the whole fleet.

Wire format (little-endian, fixed field order):

    offset  size  field
    0       2     node_id            uint16
    2       4     period_start_s     uint32 (whole seconds)
    6       4     period_end_s       uint32 (whole seconds)
    10      4     n_slots            uint32
    14      4     n_transmissions    uint32
    18      4     energy_consumed_j  float32
    22      4     mean_temp_sun_k    float32
    26      4     mean_temp_ecl_k    float32
    30      1     n_dod              uint8
    31      2*n   dod observations   uint16 each, dod * 65535 rounded

Nine observations cover a reporting period of eight 90-minute orbits plus
a trailing partial orbit; the packet is then 49 bytes, inside the 51-byte
uplink budget.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

MAX_ENCODED_BYTES = 51
MAX_DOD_OBSERVATIONS = 9
_DOD_SCALE = 65535.0

_HEADER = struct.Struct("<HIIIIfffB")


@dataclass(frozen=True)
class NodeBatteryReport:
    """One reporting period's battery usage, as sent to the gateway."""

    node_id: int
    period_start: float
    period_end: float
    n_slots: int
    n_transmissions: int
    energy_consumed_j: float
    dod_observations: tuple[float, ...]
    mean_temperature_sun_k: float
    mean_temperature_eclipse_k: float

    def __post_init__(self):
        if not self.period_start < self.period_end:
            raise ValueError(
                f"period start must precede end: [{self.period_start}, {self.period_end})"
            )
        if self.energy_consumed_j < 0:
            raise ValueError(f"energy consumed must be >= 0, got {self.energy_consumed_j}")
        if self.n_slots < 0 or self.n_transmissions < 0:
            raise ValueError("slot and transmission counts must be >= 0")
        for dod in self.dod_observations:
            if not 0.0 <= dod <= 1.0:
                raise ValueError(f"dod observation must be in [0, 1], got {dod}")
        object.__setattr__(self, "dod_observations", tuple(self.dod_observations))

    @property
    def period_days(self) -> float:
        return (self.period_end - self.period_start) / 86400.0


def encode_report(report: NodeBatteryReport) -> bytes:
    """Pack a report into its fixed-order little-endian uplink form."""
    n_dod = len(report.dod_observations)
    if n_dod > MAX_DOD_OBSERVATIONS:
        raise ValueError(
            f"report carries {n_dod} DoD observations; at most "
            f"{MAX_DOD_OBSERVATIONS} fit the uplink budget"
        )
    payload = _HEADER.pack(
        report.node_id,
        round(report.period_start),
        round(report.period_end),
        report.n_slots,
        report.n_transmissions,
        report.energy_consumed_j,
        report.mean_temperature_sun_k,
        report.mean_temperature_eclipse_k,
        n_dod,
    )
    payload += struct.pack(f"<{n_dod}H", *(round(d * _DOD_SCALE) for d in report.dod_observations))
    assert len(payload) <= MAX_ENCODED_BYTES
    return payload


def decode_report(blob: bytes) -> NodeBatteryReport:
    """Inverse of encode_report, at the wire format's numeric precision."""
    (
        node_id,
        start,
        end,
        n_slots,
        n_tx,
        energy,
        t_sun,
        t_ecl,
        n_dod,
    ) = _HEADER.unpack_from(blob)
    dods = struct.unpack_from(f"<{n_dod}H", blob, _HEADER.size)
    return NodeBatteryReport(
        node_id=node_id,
        period_start=float(start),
        period_end=float(end),
        n_slots=n_slots,
        n_transmissions=n_tx,
        energy_consumed_j=energy,
        dod_observations=tuple(d / _DOD_SCALE for d in dods),
        mean_temperature_sun_k=t_sun,
        mean_temperature_eclipse_k=t_ecl,
    )
