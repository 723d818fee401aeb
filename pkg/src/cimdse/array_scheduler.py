"""Timed simulation of a BR x BC macro array executing a tiled GEMM.

The array runs one of four disciplines, each combining a dataflow (WS or
OS, i.e. what the grid axes partition) with an interconnect (Broadcast or
Systolic, i.e. how operands reach the macros):

* ``WS``: grid rows partition K (partial sums reduce across rows), grid
  columns partition N.  A round processes one (TL x BR*AL) activation tile
  against one (BR*AL x BC*PC*LSL) weight tile.
* ``OS``: grid rows partition M (outputs accumulate in place while K
  streams), grid columns partition N; macros in a column share a weight
  block.

Every round iterates the LSL locally stored weight rows, and each row pass
computes for Tc cycles then rewrites that row for the next round (Ts).
The disciplines differ in how the rewrite is paid at array level:

* WS-Broadcast: row passes are lockstep; rewrites walk down each column
  one macro at a time (BR*Ts), the others sitting idle meanwhile.  With
  overlap the walk hides under the next compute, so a pass costs
  ``max(Tc, BR*Ts)`` and idles vanish exactly when ``BR*Ts <= Tc``.
* WS-Systolic / OS-Systolic: activation entry is staggered by Ts per grid
  row, so each macro rewrites privately right after computing; a pass
  costs ``Tc + Ts`` (or ``max(Tc, Ts)`` with overlap) and the stagger is
  paid once as a ``(BR-1)*Ts`` fill.
* OS-Broadcast: the shared column weight row is rewritten synchronously,
  one Ts covering the whole column; same pass cost as systolic, no fill.

All pass durations are closed-form integers and every round has identical
cost (edge tiles still pay full passes), so the event timeline collapses:
``simulate`` aggregates rounds analytically, while ``trace`` materializes
the per-macro segment timeline for small cases and reconciles with the
aggregate counters by construction.

Activity counters feed the cost model.  Transfers count words crossing
macro ports, so broadcast fan-out is charged per receiving macro;
weight_transfers counts buffer-side words (OS columns fetch one shared
copy) and the in-macro write energy is carried by weight_rows_written.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Literal

from .design_space import Dataflow, DesignPoint, Interconnect
from .errors import TraceCapError
from .macro_model import MacroTiming, macro_timing

SimMode = Literal["paper", "exact"]

TRACE_MAX_GRID = 8
TRACE_DEFAULT_CAP = 20000


@dataclass(frozen=True)
class GemmSpec:
    """One GEMM problem: activations M x K against weights K x N."""

    M: int
    N: int
    K: int

    def __post_init__(self):
        if self.M < 1 or self.N < 1 or self.K < 1:
            raise ValueError("GEMM dimensions must be >= 1")

    @property
    def macs(self) -> int:
        return self.M * self.N * self.K


class TileMapping(str, Enum):
    WS_map = "WS_map"
    OS_map = "OS_map"


@dataclass(frozen=True)
class Tiling:
    n_m: int
    n_n: int
    n_k: int
    m_tile: int
    n_tile: int
    k_tile: int
    mapping: TileMapping

    @property
    def rounds(self) -> int:
        return self.n_m * self.n_n * self.n_k


@dataclass(frozen=True)
class SimResult:
    total_cycles: int
    macs_executed: int
    weight_rows_written: int
    idle_macro_cycles: int
    activation_transfers: int
    weight_transfers: int
    output_transfers: int

    def merged_with(self, other: "SimResult", serial: bool = True) -> "SimResult":
        """Counter sum; cycles add when serial, else take the max."""
        return SimResult(
            total_cycles=(self.total_cycles + other.total_cycles if serial
                          else max(self.total_cycles, other.total_cycles)),
            macs_executed=self.macs_executed + other.macs_executed,
            weight_rows_written=self.weight_rows_written + other.weight_rows_written,
            idle_macro_cycles=self.idle_macro_cycles + other.idle_macro_cycles,
            activation_transfers=self.activation_transfers + other.activation_transfers,
            weight_transfers=self.weight_transfers + other.weight_transfers,
            output_transfers=self.output_transfers + other.output_transfers,
        )


ZERO_RESULT = SimResult(0, 0, 0, 0, 0, 0, 0)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def tile(gemm: GemmSpec, point: DesignPoint) -> Tiling:
    """Tile the GEMM onto the array per the point's dataflow mapping."""
    m, a = point.macro, point.array
    n_tile = a.BC * m.PC * m.LSL
    if a.dataflow is Dataflow.WS:
        mapping = TileMapping.WS_map
        m_tile, k_tile = a.TL, a.BR * m.AL
    else:
        mapping = TileMapping.OS_map
        m_tile, k_tile = a.BR * a.TL, m.AL
    return Tiling(
        n_m=_ceil_div(gemm.M, m_tile),
        n_n=_ceil_div(gemm.N, n_tile),
        n_k=_ceil_div(gemm.K, k_tile),
        m_tile=m_tile,
        n_tile=n_tile,
        k_tile=k_tile,
        mapping=mapping,
    )


@dataclass(frozen=True)
class _RoundSchedule:
    """Per-round quantities shared by simulate and trace."""

    tc_eff: int            # compute pass incl. exact-mode pipeline fill/drain
    ts: int
    row_slot: int          # time between successive row passes of one macro
    round_cycles: int      # LSL * row_slot
    fill: int              # one-time systolic stagger, (BR-1)*Ts
    tail: int              # one-time exact-mode reduction/skew drain
    idle_per_pass: int     # per macro, cycles neither computing nor updating
    lsl: int


def _round_schedule(point: DesignPoint, timing: MacroTiming, mode: SimMode) -> _RoundSchedule:
    m, a = point.macro, point.array
    tc_eff = timing.Tc + (m.PL if mode == "exact" else 0)
    ts = timing.Ts
    is_ws_bcast = (a.dataflow is Dataflow.WS
                   and a.interconnect is Interconnect.BROADCAST)
    update = a.BR * ts if is_ws_bcast else ts
    if m.OL:
        row_slot = max(tc_eff, update)
        idle = row_slot - max(tc_eff, ts) if is_ws_bcast else 0
    else:
        row_slot = tc_eff + update
        idle = (a.BR - 1) * ts if is_ws_bcast else 0
    systolic = a.interconnect is Interconnect.SYSTOLIC
    fill = (a.BR - 1) * ts if systolic else 0
    tail = 0
    if mode == "exact" and (systolic or (a.dataflow is Dataflow.WS and a.BR > 1)):
        tail = m.PL
    return _RoundSchedule(
        tc_eff=tc_eff, ts=ts, row_slot=row_slot,
        round_cycles=m.LSL * row_slot, fill=fill, tail=tail,
        idle_per_pass=idle, lsl=m.LSL,
    )


def simulate(
    gemm: GemmSpec,
    point: DesignPoint,
    mode: SimMode = "paper",
    elide_last_update: bool = False,
) -> SimResult:
    """Run the tiled GEMM on the array and return cycles plus counters.

    Paper mode reproduces the steady-state closed forms exactly (every row
    pass pays its rewrite, pipeline fill/drain ignored).  Exact mode adds
    PL per pass plus a one-time drain, and may elide the very last rewrite.
    """
    m, a = point.macro, point.array
    timing = macro_timing(point)
    tiling = tile(gemm, point)
    rounds = tiling.rounds
    sched = _round_schedule(point, timing, mode)

    total = rounds * sched.round_cycles + sched.fill + sched.tail

    macros = a.BR * a.BC
    rows_per_round = m.LSL * macros
    row_words = m.PC * m.AL  # one weight row across the PC banks
    if a.dataflow is Dataflow.WS:
        wt_words_per_round = rows_per_round * row_words
        out_words = rounds * a.TL * tiling.n_tile
    else:
        wt_words_per_round = m.LSL * a.BC * row_words  # column-shared fetch
        out_words = tiling.n_m * tiling.n_n * tiling.m_tile * tiling.n_tile

    rows_written = (rounds + 1) * rows_per_round  # +1: preload before cycle 0
    wt_words = (rounds + 1) * wt_words_per_round
    act_words = rounds * macros * m.AL * a.TL
    idle = rounds * sched.lsl * macros * sched.idle_per_pass

    if elide_last_update and mode == "exact":
        update = a.BR * sched.ts if (a.dataflow is Dataflow.WS and
                                     a.interconnect is Interconnect.BROADCAST) else sched.ts
        saved = (sched.row_slot - sched.tc_eff) if m.OL else update
        total -= saved
        rows_written -= macros
        wt_words -= macros * row_words if a.dataflow is Dataflow.WS else a.BC * row_words

    return SimResult(
        total_cycles=total,
        macs_executed=gemm.macs,
        weight_rows_written=rows_written,
        idle_macro_cycles=idle,
        activation_transfers=act_words,
        weight_transfers=wt_words,
        output_transfers=out_words,
    )


def compute_lower_bound(gemm: GemmSpec, point: DesignPoint) -> int:
    """Compute-only cycle bound from peak MAC rate; simulate never goes below."""
    m, a = point.macro, point.array
    peak_macs = m.PC * m.AL * 2 * a.BR * a.BC // m.IBW
    return _ceil_div(gemm.macs, peak_macs)


@dataclass(frozen=True)
class TraceSegment:
    row: int
    col: int
    start: int
    end: int
    state: str  # compute | update | idle | skew-fill


def trace(
    gemm: GemmSpec,
    point: DesignPoint,
    mode: SimMode = "paper",
    cap: int = TRACE_DEFAULT_CAP,
) -> list[TraceSegment]:
    """Per-macro occupancy timeline for small arrays and workloads.

    Segments are ordered by (row, col, start) and their aggregate durations
    reconcile exactly with the simulate() counters.
    """
    m, a = point.macro, point.array
    if a.BR > TRACE_MAX_GRID or a.BC > TRACE_MAX_GRID:
        raise ValueError(f"trace supports arrays up to {TRACE_MAX_GRID}x{TRACE_MAX_GRID}")
    timing = macro_timing(point)
    tiling = tile(gemm, point)
    sched = _round_schedule(point, timing, mode)
    systolic = a.interconnect is Interconnect.SYSTOLIC
    is_ws_bcast = (a.dataflow is Dataflow.WS
                   and a.interconnect is Interconnect.BROADCAST)

    segments: list[TraceSegment] = []

    def emit(row: int, col: int, start: int, dur: int, state: str) -> None:
        if dur <= 0:
            return
        if len(segments) >= cap:
            raise TraceCapError(f"trace event cap {cap} exceeded", segments)
        segments.append(TraceSegment(row, col, start, start + dur, state))

    for row in range(a.BR):
        offset = row * sched.ts if systolic else 0
        for col in range(a.BC):
            if offset:
                emit(row, col, 0, offset, "skew-fill")
            for rnd in range(tiling.rounds):
                base = offset + rnd * sched.round_cycles
                for p in range(sched.lsl):
                    t = base + p * sched.row_slot
                    if m.OL:
                        emit(row, col, t, sched.tc_eff, "compute")
                        emit(row, col, t + sched.tc_eff,
                             max(0, sched.ts - sched.tc_eff), "update")
                        emit(row, col, t + max(sched.tc_eff, sched.ts),
                             sched.idle_per_pass, "idle")
                    elif is_ws_bcast:
                        emit(row, col, t, sched.tc_eff, "compute")
                        emit(row, col, t + sched.tc_eff, row * sched.ts, "idle")
                        emit(row, col, t + sched.tc_eff + row * sched.ts,
                             sched.ts, "update")
                        emit(row, col, t + sched.tc_eff + (row + 1) * sched.ts,
                             (a.BR - 1 - row) * sched.ts, "idle")
                    else:
                        emit(row, col, t, sched.tc_eff, "compute")
                        emit(row, col, t + sched.tc_eff, sched.ts, "update")
    return segments


def format_trace(segments: Iterable[TraceSegment]) -> str:
    """Line-oriented trace serialization for external Gantt tooling."""
    lines = ["row,col,start_cycle,end_cycle,state"]
    lines.extend(f"{s.row},{s.col},{s.start},{s.end},{s.state}" for s in segments)
    return "\n".join(lines) + "\n"
