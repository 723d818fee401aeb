"""Closed-form macro timing.

A macro finishes one activation block (TL columns) against one weight row
in ``Tc = TL * IBW/2`` cycles and rewrites one weight row in
``Ts = ceil(kappa * PC * WBW)`` cycles.  A full block pass over the LSL
locally stored weight rows therefore costs ``LSL * (Ts + Tc)`` without
compute-I/O overlap and ``LSL * max(Ts, Tc)`` with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .design_space import DesignPoint


@dataclass(frozen=True)
class MacroTiming:
    Tc: int
    Ts: int
    T_block_nol: int
    T_block_ol: int
    fill_drain: int
    peak_macs_per_cycle: float


def compute_cycles(TL: int, IBW: int) -> int:
    """Cycles to push one TL-column activation block through one weight row."""
    if TL < 1:
        raise ValueError("TL must be >= 1")
    if IBW < 2 or IBW % 2 != 0:
        raise ValueError("IBW must be a positive even integer")
    return TL * IBW // 2

def weight_row_cycles(kappa: float, PC: int, WBW: int) -> int:
    """Cycles to rewrite one weight row, rounded up to whole cycles."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if PC < 1 or WBW < 1:
        raise ValueError("PC and WBW must be >= 1")
    # Fraction keeps the product exact for the binary float kappa, so the
    # ceiling never flips on representation noise.
    return math.ceil(Fraction(kappa) * PC * WBW)

def block_cycles(Tc: int, Ts: int, LSL: int, overlap: bool) -> int:
    """Cycles for one weight-block x activation-block matmul."""
    if Tc < 1 or Ts < 1 or LSL < 1:
        raise ValueError("Tc, Ts, LSL must be positive")
    return LSL * (max(Ts, Tc) if overlap else Ts + Tc)

def overlap_gain(Tc: int, Ts: int) -> float:
    """Latency-reduction ratio from overlap: 1 - max(Ts,Tc)/(Ts+Tc), in (0, 0.5]."""
    if Tc <= 0 or Ts <= 0:
        raise ValueError("Tc and Ts must be positive")
    return 1.0 - max(Ts, Tc) / (Ts + Tc)


def macro_timing(point: DesignPoint) -> MacroTiming:
    """All derived per-macro cycle quantities for a design point."""
    m, a = point.macro, point.array
    tc = compute_cycles(a.TL, m.IBW)
    ts = weight_row_cycles(m.kappa, m.PC, m.WBW)
    return MacroTiming(
        Tc=tc,
        Ts=ts,
        T_block_nol=block_cycles(tc, ts, m.LSL, overlap=False),
        T_block_ol=block_cycles(tc, ts, m.LSL, overlap=True),
        fill_drain=m.PL,
        peak_macs_per_cycle=m.PC * m.AL / (m.IBW / 2),
    )
