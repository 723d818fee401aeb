"""Calibration-driven parametric PPA model.

Every coefficient here is a declared analytical substitute for post-layout
extraction; absolute watts and mm2 carry no silicon meaning.  The shipped
defaults are constructed so the model reproduces the qualitative trends the
artifact is tested against (frequency falls with macro capacity, broadcast
integration area scales worse than systolic, compute-I/O overlap costs
energy) without asserting any absolute value.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable

from .array_scheduler import SimResult
from .design_space import DesignPoint, Interconnect
from .errors import CalibrationError, ParseError

#: Reference macro capacity (bit-wise multipliers) at which f(PL=0) = f0.
REF_CAPACITY = 65536


@dataclass(frozen=True)
class Calibration:
    f0: float                 # Hz at REF_CAPACITY, PL = 0
    alpha_f: float            # capacity exponent of the frequency roll-off
    beta_PL: float            # per-pipeline-stage frequency uplift
    e_mac: float              # J per executed MAC
    e_write: float            # J per weight bit written into a macro
    e_xfer_bcast: float       # J per word moved across a broadcast fabric
    e_xfer_syst: float        # J per word moved across a systolic fabric
    p_static_per_mult: float  # W leakage per bit-wise multiplier
    ol_energy_penalty: float  # dynamic-energy multiplier increment when OL
    ol_area_penalty: float    # fractional macro area increase when OL
    a_mult: float             # mm2 per bit-wise multiplier
    a_macro_fixed: float      # mm2 fixed per macro (I/O, control)
    gamma_bcast: float        # integration area overhead = gamma * n^delta
    gamma_syst: float
    delta_bcast: float
    delta_syst: float

    def __post_init__(self):
        positive = ("f0", "alpha_f", "e_mac", "e_write", "e_xfer_bcast",
                    "e_xfer_syst", "p_static_per_mult", "a_mult",
                    "a_macro_fixed", "delta_bcast", "delta_syst")
        for name in positive:
            if getattr(self, name) <= 0:
                raise CalibrationError(f"{name} must be positive")
        nonneg = ("beta_PL", "ol_area_penalty", "gamma_bcast", "gamma_syst")
        for name in nonneg:
            if getattr(self, name) < 0:
                raise CalibrationError(f"{name} must be non-negative")
        if not 0.0 <= self.ol_energy_penalty <= 1.0:
            raise CalibrationError("ol_energy_penalty must be in [0, 1]")
        if self.delta_bcast <= self.delta_syst:
            raise CalibrationError(
                "delta_bcast must exceed delta_syst (broadcast scales worse)")


DEFAULTS = {
    "f0": 1.0e9,
    "alpha_f": 0.25,
    "beta_PL": 0.05,
    "e_mac": 6.0e-13,
    "e_write": 5.0e-14,
    "e_xfer_bcast": 4.2e-13,
    "e_xfer_syst": 3.5e-13,
    "p_static_per_mult": 1.0e-8,
    "ol_energy_penalty": 0.35,
    "ol_area_penalty": 0.15,
    "a_mult": 2.0e-6,
    "a_macro_fixed": 0.02,
    "gamma_bcast": 0.015,
    "gamma_syst": 0.02,
    "delta_bcast": 0.8,
    "delta_syst": 0.35,
}

CALIBRATION_KEYS = tuple(f.name for f in fields(Calibration))


def default_calibration() -> Calibration:
    return Calibration(**DEFAULTS)


def load_calibration(text: str, path: str | None = None) -> tuple[Calibration, dict[str, str]]:
    """Parse a flat `key = number` document; missing keys take defaults.

    Returns the calibration plus a provenance map flagging each key as
    "file" or "default".  Syntax problems raise ParseError; coefficient
    invariant violations raise CalibrationError.
    """
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = number', got {line!r}", path, lineno)
        key, _, val = (s.strip() for s in line.partition("="))
        if key not in CALIBRATION_KEYS:
            raise ParseError(f"unknown calibration key {key!r}", path, lineno)
        try:
            values[key] = float(val)
        except ValueError:
            raise ParseError(f"{key} must be a number, got {val!r}", path, lineno) from None
    provenance = {k: ("file" if k in values else "default") for k in CALIBRATION_KEYS}
    merged = {**DEFAULTS, **values}
    return Calibration(**merged), provenance


def frequency(point: DesignPoint, cal: Calibration) -> float:
    """Operating frequency: falls with multiplier count, rises with PL."""
    c = point.macro.multiplier_count
    return cal.f0 * (c / REF_CAPACITY) ** (-cal.alpha_f) * (1 + cal.beta_PL * point.macro.PL)


def peak_throughput(point: DesignPoint, cal: Calibration) -> float:
    """Theoretical peak MAC rate (MAC/s): MAC units times frequency."""
    m, a = point.macro, point.array
    macs_per_cycle = m.PC * m.AL * 2 / m.IBW
    return a.BR * a.BC * a.cores * macs_per_cycle * frequency(point, cal)


@dataclass(frozen=True)
class PpaEstimate:
    latency_s: float
    power_w: float
    area_mm2: float
    objective: float  # latency^2 * power * area
    frequency_hz: float
    cycles: int


def _xfer_coeff(point: DesignPoint, cal: Calibration) -> float:
    if point.array.interconnect is Interconnect.BROADCAST:
        return cal.e_xfer_bcast
    return cal.e_xfer_syst


def dynamic_energy_breakdown(point: DesignPoint, sim: SimResult, cal: Calibration) -> dict[str, float]:
    """Joules per event class, with the overlap penalty already applied."""
    m = point.macro
    scale = 1.0 + (cal.ol_energy_penalty if m.OL else 0.0)
    transfers = (sim.activation_transfers + sim.weight_transfers
                 + sim.output_transfers)
    return {
        "mac": scale * cal.e_mac * sim.macs_executed,
        "write": scale * cal.e_write * sim.weight_rows_written * m.PC * m.WBW,
        "xfer": scale * _xfer_coeff(point, cal) * transfers,
    }


def macro_area(point: DesignPoint, cal: Calibration) -> float:
    m = point.macro
    ol_factor = 1.0 + (cal.ol_area_penalty if m.OL else 0.0)
    return cal.a_macro_fixed + cal.a_mult * m.multiplier_count * ol_factor


def integration_overhead(point: DesignPoint, cal: Calibration) -> float:
    """Fractional array-integration area overhead: gamma * (BR*BC)^delta."""
    n = point.array.BR * point.array.BC
    if point.array.interconnect is Interconnect.BROADCAST:
        return cal.gamma_bcast * n ** cal.delta_bcast
    return cal.gamma_syst * n ** cal.delta_syst


def area(point: DesignPoint, cal: Calibration) -> float:
    a = point.array
    return (a.cores * a.BR * a.BC * macro_area(point, cal)
            * (1.0 + integration_overhead(point, cal)))


def static_power(point: DesignPoint, cal: Calibration) -> float:
    m, a = point.macro, point.array
    return cal.p_static_per_mult * m.multiplier_count * a.BR * a.BC * a.cores


def estimate(point: DesignPoint, sim: SimResult, cal: Calibration) -> PpaEstimate:
    """Convert a simulation result into latency/power/area and the objective."""
    if sim.total_cycles <= 0:
        raise ValueError("degenerate input: SimResult has zero cycles")
    f = frequency(point, cal)
    latency = sim.total_cycles / f
    dyn = sum(dynamic_energy_breakdown(point, sim, cal).values())
    power = static_power(point, cal) + dyn / latency
    a = area(point, cal)
    return PpaEstimate(
        latency_s=latency,
        power_w=power,
        area_mm2=a,
        objective=latency * latency * power * a,
        frequency_hz=f,
        cycles=sim.total_cycles,
    )


def power_breakdown(point: DesignPoint, sim: SimResult, cal: Calibration) -> dict[str, float]:
    """Watts per component; 'xfer' is the array-integration share."""
    f = frequency(point, cal)
    latency = sim.total_cycles / f
    dyn = dynamic_energy_breakdown(point, sim, cal)
    out = {name: joules / latency for name, joules in dyn.items()}
    out["static"] = static_power(point, cal)
    return out
