import random

import pytest

from cimdse.array_scheduler import (GemmSpec, TileMapping, compute_lower_bound,
                                    format_trace, simulate, tile, trace)
from cimdse.design_space import Dataflow, Interconnect
from cimdse.errors import TraceCapError
from cimdse.macro_model import macro_timing

from conftest import FLOW_COMBOS, mk_point
from oracle import (event_total_cycles_nol, event_total_cycles_ol,
                    tiling_mac_sum)


def one_block_gemm(point) -> GemmSpec:
    t = tile(GemmSpec(1, 1, 1), point)
    return GemmSpec(M=t.m_tile, N=t.n_tile, K=t.k_tile)


def flow_name(point) -> str:
    df = "ws" if point.array.dataflow is Dataflow.WS else "os"
    ic = "bcast" if point.array.interconnect is Interconnect.BROADCAST else "syst"
    return f"{df}_{ic}"


# ---------------------------------------------------------------------------
# tiling

def test_tile_ws_map_regression():
    # 8B-model QKV GEMM against the published tuple, WS mapping
    point = mk_point(AL=256, LSL=2, PC=16, PL=4, BR=2, BC=4, TL=32,
                     dataflow=Dataflow.WS)
    t = tile(GemmSpec(M=8192, N=4096, K=4096), point)
    assert (t.k_tile, t.n_k) == (512, 8)
    assert (t.n_tile, t.n_n) == (128, 32)
    assert (t.m_tile, t.n_m) == (32, 256)
    assert t.mapping is TileMapping.WS_map


def test_tile_degenerate_gemm():
    t = tile(GemmSpec(1, 1, 1), mk_point())
    assert (t.n_m, t.n_n, t.n_k) == (1, 1, 1)


def test_tile_os_map_extents():
    point = mk_point(BR=2, TL=16, dataflow=Dataflow.OS)
    t = tile(GemmSpec(64, 64, 64), point)
    assert t.m_tile == 32  # BR * TL
    assert t.k_tile == point.macro.AL
    assert t.mapping is TileMapping.OS_map


def test_tile_partial_sum_identity():
    # ceil-tiled real extents always add back up to the full GEMM
    rng = random.Random(11)
    for _ in range(25):
        g = GemmSpec(rng.randint(1, 500), rng.randint(1, 500), rng.randint(1, 500))
        point = mk_point(AL=rng.choice((8, 32)), LSL=rng.choice((2, 4)),
                         PC=rng.choice((2, 8)), BR=rng.randint(1, 3),
                         BC=rng.randint(1, 3), TL=rng.choice((8, 16)),
                         dataflow=rng.choice((Dataflow.WS, Dataflow.OS)))
        t = tile(g, point)
        assert tiling_mac_sum(g.M, g.N, g.K, t.m_tile, t.n_tile, t.k_tile) == g.macs


# ---------------------------------------------------------------------------
# simulate: closed-form equalities

@pytest.mark.parametrize("df,ic", FLOW_COMBOS)
@pytest.mark.parametrize("overlap", [False, True])
def test_single_macro_one_block_matches_block_cycles(df, ic, overlap):
    point = mk_point(AL=64, LSL=2, PC=4, OL=overlap, TL=16,
                     dataflow=df, interconnect=ic)
    t = macro_timing(point)
    got = simulate(one_block_gemm(point), point).total_cycles
    assert got == (t.T_block_ol if overlap else t.T_block_nol)


def test_ws_broadcast_two_rows_single_block():
    # with one weight row, one pass: Tc then two serialized updates
    point = mk_point(AL=8, LSL=1, PC=2, BR=2, TL=16,
                     dataflow=Dataflow.WS, interconnect=Interconnect.BROADCAST)
    sim = simulate(one_block_gemm(point), point)
    assert sim.total_cycles == 64 + 2 * 16  # Tc=64, Ts=16


def test_single_macro_reduction_all_flows_equal():
    gemm = GemmSpec(100, 70, 130)
    for overlap in (False, True):
        totals = set()
        for df, ic in FLOW_COMBOS:
            point = mk_point(AL=16, LSL=4, PC=4, OL=overlap, BR=1, BC=1,
                             TL=32, dataflow=df, interconnect=ic)
            t = macro_timing(point)
            sim = simulate(gemm, point)
            totals.add(sim.total_cycles)
            rounds = tile(gemm, point).rounds
            block = t.T_block_ol if overlap else t.T_block_nol
            assert sim.total_cycles == rounds * block
        assert len(totals) == 1


# ---------------------------------------------------------------------------
# simulate vs the strict event-timeline oracle

@pytest.mark.parametrize("df,ic", FLOW_COMBOS)
@pytest.mark.parametrize("br", [1, 2, 4])
def test_nol_totals_match_event_oracle(df, ic, br):
    point = mk_point(AL=8, LSL=2, PC=4, BR=br, BC=2, TL=8,
                     dataflow=df, interconnect=ic)
    t = macro_timing(point)
    gemm = GemmSpec(M=40, N=50, K=60)
    rounds = tile(gemm, point).rounds
    want = event_total_cycles_nol(t.Tc, t.Ts, 2, br, rounds, flow_name(point))
    assert simulate(gemm, point).total_cycles == want


@pytest.mark.parametrize("df,ic", FLOW_COMBOS)
@pytest.mark.parametrize("br,pc,tl", [(1, 4, 8), (2, 4, 32), (4, 8, 8), (2, 2, 64)])
def test_ol_marginal_round_cost_matches_event_oracle(df, ic, br, pc, tl):
    # the closed form is a steady-state rate: growing the workload by extra
    # rounds must cost exactly what the strict event timeline charges
    point = mk_point(AL=8, LSL=2, PC=pc, OL=True, BR=br, BC=2, TL=tl,
                     dataflow=df, interconnect=ic)
    t = macro_timing(point)
    name = flow_name(point)
    base = tile(one_block_gemm(point), point)
    assert base.rounds == 1
    sim_rate = simulate(one_block_gemm(point), point)

    strict_r4 = event_total_cycles_ol(t.Tc, t.Ts, 2, br, 4, name)
    strict_r2 = event_total_cycles_ol(t.Tc, t.Ts, 2, br, 2, name)
    fill = (br - 1) * t.Ts if point.array.interconnect is Interconnect.SYSTOLIC else 0
    assert (strict_r4 - strict_r2) // 2 == sim_rate.total_cycles - fill
    # amortized total never exceeds the strict timeline
    assert 4 * (sim_rate.total_cycles - fill) + fill <= strict_r4


# ---------------------------------------------------------------------------
# counters and invariants

def random_case(rng):
    df = rng.choice((Dataflow.WS, Dataflow.OS))
    ic = rng.choice((Interconnect.BROADCAST, Interconnect.SYSTOLIC))
    point = mk_point(AL=rng.choice((8, 32, 256)), LSL=rng.choice((2, 8)),
                     PC=rng.choice((2, 16, 64)), PL=rng.randint(0, 5),
                     OL=rng.choice((False, True)), BR=rng.randint(1, 8),
                     BC=rng.randint(1, 8), TL=rng.choice((8, 64, 256)),
                     dataflow=df, interconnect=ic)
    gemm = GemmSpec(rng.randint(1, 3000), rng.randint(1, 3000), rng.randint(1, 3000))
    return gemm, point


def test_mac_conservation_random():
    rng = random.Random(5)
    for _ in range(100):
        gemm, point = random_case(rng)
        assert simulate(gemm, point).macs_executed == gemm.macs


def test_mnk64_conservation_all_flows():
    gemm = GemmSpec(64, 64, 64)
    for df, ic in FLOW_COMBOS:
        for overlap in (False, True):
            point = mk_point(OL=overlap, BR=2, BC=2, dataflow=df, interconnect=ic)
            assert simulate(gemm, point).macs_executed == 262_144


def test_overlap_bound_random():
    rng = random.Random(6)
    for _ in range(60):
        gemm, point = random_case(rng)
        p_nol = mk_point(**{**_kwargs(point), "OL": False})
        p_ol = mk_point(**{**_kwargs(point), "OL": True})
        nol = simulate(gemm, p_nol).total_cycles
        ol = simulate(gemm, p_ol).total_cycles
        assert ol <= nol <= 2 * ol


def _kwargs(point):
    m, a = point.macro, point.array
    return dict(AL=m.AL, LSL=m.LSL, PC=m.PC, PL=m.PL, OL=m.OL, BR=a.BR, BC=a.BC,
                dataflow=a.dataflow, interconnect=a.interconnect, TL=a.TL,
                cores=a.cores)


def test_ws_broadcast_idle_elimination():
    # BR*Ts <= Tc with overlap: zero update-attributable idle
    point = mk_point(PC=2, BR=2, OL=True, TL=16,
                     dataflow=Dataflow.WS, interconnect=Interconnect.BROADCAST)
    t = macro_timing(point)
    assert point.array.BR * t.Ts <= t.Tc
    sim = simulate(GemmSpec(100, 100, 100), point)
    assert sim.idle_macro_cycles == 0
    assert sim.total_cycles == tile(GemmSpec(100, 100, 100), point).rounds * point.macro.LSL * t.Tc

    # violated: update stream outruns compute, macros stall
    slow = mk_point(PC=64, BR=4, OL=True, TL=8,
                    dataflow=Dataflow.WS, interconnect=Interconnect.BROADCAST)
    ts2 = macro_timing(slow)
    assert slow.array.BR * ts2.Ts > ts2.Tc
    sim2 = simulate(GemmSpec(100, 100, 100), slow)
    assert sim2.idle_macro_cycles > 0


def test_ws_broadcast_nol_idle_matches_rule():
    point = mk_point(PC=4, BR=3, BC=2, TL=16,
                     dataflow=Dataflow.WS, interconnect=Interconnect.BROADCAST)
    t = macro_timing(point)
    gemm = GemmSpec(50, 50, 50)
    sim = simulate(gemm, point)
    rounds = tile(gemm, point).rounds
    per_pass = (point.array.BR - 1) * t.Ts
    assert sim.idle_macro_cycles == rounds * point.macro.LSL * 6 * per_pass


def test_systolic_flows_never_idle():
    for df in (Dataflow.WS, Dataflow.OS):
        for overlap in (False, True):
            point = mk_point(PC=16, BR=4, BC=4, OL=overlap, TL=8,
                             dataflow=df, interconnect=Interconnect.SYSTOLIC)
            assert simulate(GemmSpec(200, 200, 200), point).idle_macro_cycles == 0


def test_monotone_in_dimensions():
    point = mk_point(AL=32, LSL=2, PC=8, BR=2, BC=2, TL=16)
    base = simulate(GemmSpec(100, 100, 100), point).total_cycles
    for g in (GemmSpec(101, 100, 100), GemmSpec(100, 231, 100),
              GemmSpec(100, 100, 999)):
        assert simulate(g, point).total_cycles >= base


def test_compute_lower_bound_respected():
    rng = random.Random(7)
    for _ in range(60):
        gemm, point = random_case(rng)
        sim = simulate(gemm, point)
        assert sim.total_cycles >= compute_lower_bound(gemm, point)


def test_systolic_broadcast_gap_bounded_ws_ol():
    # WS with overlap: systolic never trails broadcast by more than the skew
    rng = random.Random(8)
    for _ in range(40):
        gemm, point = random_case(rng)
        kw = _kwargs(point)
        kw.update(OL=True, dataflow=Dataflow.WS)
        p_s = mk_point(**{**kw, "interconnect": Interconnect.SYSTOLIC})
        p_b = mk_point(**{**kw, "interconnect": Interconnect.BROADCAST})
        t = macro_timing(p_s)
        diff = simulate(gemm, p_s).total_cycles - simulate(gemm, p_b).total_cycles
        assert diff <= (p_s.array.BR - 1) * t.Ts + (p_s.array.BC - 1) * t.Ts + p_s.macro.PL


def test_weight_rows_written_accounting():
    point = mk_point(AL=8, LSL=2, PC=2, BR=2, BC=3, TL=8)
    gemm = GemmSpec(16, 24, 32)
    t = tile(gemm, point)
    sim = simulate(gemm, point)
    # every round rewrites LSL rows per macro, plus the pre-cycle-0 preload
    assert sim.weight_rows_written == (t.rounds + 1) * 2 * 6


def test_os_weight_traffic_column_shared():
    kw = dict(AL=8, LSL=2, PC=2, BR=4, BC=3, TL=8, interconnect=Interconnect.SYSTOLIC)
    gemm = GemmSpec(256, 256, 256)
    ws = simulate(gemm, mk_point(dataflow=Dataflow.WS, **kw))
    os_ = simulate(gemm, mk_point(dataflow=Dataflow.OS, **kw))
    # same tiling volume: OS fetches one copy per column instead of per macro
    assert ws.weight_transfers == 4 * os_.weight_transfers
    # OS drains outputs once per (m, n) tile instead of every K round
    assert os_.output_transfers < ws.output_transfers


# ---------------------------------------------------------------------------
# exact mode

def test_exact_mode_adds_pipeline_cycles():
    point_p = mk_point(AL=8, LSL=2, PC=2, PL=3, TL=8)
    gemm = one_block_gemm(point_p)
    paper = simulate(gemm, point_p, mode="paper").total_cycles
    exact = simulate(gemm, point_p, mode="exact").total_cycles
    # one round, LSL=2 passes, +PL per pass, +PL systolic drain
    assert exact == paper + 2 * 3 + 3


def test_exact_mode_pl_zero_matches_paper():
    point = mk_point(PL=0, BR=2, BC=2, interconnect=Interconnect.SYSTOLIC)
    gemm = GemmSpec(64, 64, 64)
    assert simulate(gemm, point, "exact").total_cycles == \
        simulate(gemm, point, "paper").total_cycles


def test_exact_mode_elide_last_update():
    point = mk_point(AL=8, LSL=2, PC=2, TL=8)
    gemm = one_block_gemm(point)
    t = macro_timing(point)
    keep = simulate(gemm, point, "exact")
    elide = simulate(gemm, point, "exact", elide_last_update=True)
    assert keep.total_cycles - elide.total_cycles == t.Ts
    assert keep.weight_rows_written - elide.weight_rows_written == 1


# ---------------------------------------------------------------------------
# trace

def test_trace_single_macro_alternates():
    point = mk_point(AL=8, LSL=2, PC=2, TL=16)
    segments = trace(one_block_gemm(point), point)
    states = [s.state for s in segments]
    assert states == ["compute", "update", "compute", "update"]
    t = macro_timing(point)
    assert segments[0].end - segments[0].start == t.Tc
    assert segments[1].end - segments[1].start == t.Ts


def test_trace_ws_broadcast_idle_interval():
    point = mk_point(AL=8, LSL=2, PC=2, BR=2, TL=16,
                     dataflow=Dataflow.WS, interconnect=Interconnect.BROADCAST)
    segments = trace(one_block_gemm(point), point)
    t = macro_timing(point)
    idles = [s for s in segments if s.state == "idle"]
    assert idles
    assert all(s.end - s.start == t.Ts for s in idles)
    per_macro = {}
    for s in idles:
        per_macro[(s.row, s.col)] = per_macro.get((s.row, s.col), 0) + s.end - s.start
    assert per_macro == {(0, 0): 2 * t.Ts, (1, 0): 2 * t.Ts}


def test_trace_systolic_stagger():
    point = mk_point(AL=8, LSL=2, PC=2, BR=2, BC=2, TL=16,
                     dataflow=Dataflow.WS, interconnect=Interconnect.SYSTOLIC)
    segments = trace(one_block_gemm(point), point)
    t = macro_timing(point)
    start_row0 = min(s.start for s in segments if s.row == 0 and s.state == "compute")
    start_row1 = min(s.start for s in segments if s.row == 1 and s.state == "compute")
    assert start_row1 - start_row0 == t.Ts
    fills = [s for s in segments if s.state == "skew-fill"]
    assert {(s.row, s.end - s.start) for s in fills} == {(1, t.Ts)}


@pytest.mark.parametrize("df,ic", FLOW_COMBOS)
@pytest.mark.parametrize("overlap", [False, True])
def test_trace_reconciles_with_sim(df, ic, overlap):
    point = mk_point(AL=8, LSL=2, PC=4, OL=overlap, BR=2, BC=2, TL=8,
                     dataflow=df, interconnect=ic)
    gemm = GemmSpec(30, 40, 50)
    sim = simulate(gemm, point)
    segments = trace(gemm, point)
    idle = sum(s.end - s.start for s in segments if s.state == "idle")
    assert idle == sim.idle_macro_cycles
    assert max(s.end for s in segments) == sim.total_cycles
    t = macro_timing(point)
    per_macro_compute = {}
    for s in segments:
        if s.state == "compute":
            key = (s.row, s.col)
            per_macro_compute[key] = per_macro_compute.get(key, 0) + s.end - s.start
    n_macros = point.array.BR * point.array.BC
    for key, cycles in per_macro_compute.items():
        assert cycles * t.peak_macs_per_cycle >= gemm.macs / n_macros


def test_trace_rejects_big_arrays():
    point = mk_point(BR=9)
    with pytest.raises(ValueError):
        trace(GemmSpec(8, 8, 8), point)


def test_trace_cap_carries_partial():
    point = mk_point(AL=8, LSL=2, PC=2, TL=8)
    with pytest.raises(TraceCapError) as exc:
        trace(GemmSpec(2000, 2000, 2000), point, cap=10)
    assert len(exc.value.partial) == 10


def test_trace_serialization():
    point = mk_point(AL=8, LSL=2, PC=2, TL=8)
    text = format_trace(trace(one_block_gemm(point), point))
    lines = text.strip().splitlines()
    assert lines[0] == "row,col,start_cycle,end_cycle,state"
    assert lines[1].split(",")[:2] == ["0", "0"]
