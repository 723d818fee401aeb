import pytest

from cimdse.macro_model import (block_cycles, compute_cycles, macro_timing,
                                overlap_gain, weight_row_cycles)

from conftest import mk_point


@pytest.mark.parametrize("tl,ibw,expect", [(16, 8, 64), (1, 2, 1), (512, 8, 2048)])
def test_compute_cycles(tl, ibw, expect):
    assert compute_cycles(tl, ibw) == expect


def test_compute_cycles_rejects_odd_ibw():
    with pytest.raises(ValueError):
        compute_cycles(16, 7)


@pytest.mark.parametrize("kappa,pc,wbw,expect", [
    (1.0, 16, 8, 128),
    (1.0, 2, 8, 16),
    (0.5, 3, 8, 12),   # exact product, no spurious round-up
    (0.3, 5, 8, 12),   # 12.0 minus float slack still ceils to 12
])
def test_weight_row_cycles(kappa, pc, wbw, expect):
    assert weight_row_cycles(kappa, pc, wbw) == expect


def test_weight_row_cycles_rejects_nonpositive_kappa():
    with pytest.raises(ValueError):
        weight_row_cycles(0.0, 2, 8)


def test_block_cycles():
    assert block_cycles(64, 128, 2, overlap=False) == 384
    assert block_cycles(64, 128, 2, overlap=True) == 256
    assert block_cycles(100, 100, 4, overlap=False) == 800
    assert block_cycles(100, 100, 4, overlap=True) == 400


def test_overlap_gain():
    assert overlap_gain(100, 100) == 0.5
    assert overlap_gain(300, 100) == pytest.approx(0.25)
    # compute-dominated designs gain little
    assert overlap_gain(1000, 100) < 0.1


def test_block_cycle_bound_exhaustive():
    # overlap never loses, and never wins more than 2x
    for tc in range(1, 257, 15):
        for ts in range(1, 257, 15):
            for lsl in (2, 8, 64):
                ol = block_cycles(tc, ts, lsl, overlap=True)
                nol = block_cycles(tc, ts, lsl, overlap=False)
                assert ol <= nol <= 2 * ol


def test_macro_timing_regression_tuple():
    # published 8B-model tuple: LSL=2, AL=256, PC=16, PL=4, TL=32, kappa=1
    t = macro_timing(mk_point(AL=256, LSL=2, PC=16, PL=4, TL=32))
    assert (t.Tc, t.Ts) == (128, 128)
    assert t.T_block_ol == 256
    assert t.T_block_nol == 512
    assert t.fill_drain == 4


def test_macro_timing_peak_rate():
    t = macro_timing(mk_point(AL=8, PC=2, IBW=8))
    assert t.peak_macs_per_cycle == 4  # 16 MACs per 4-cycle pass


def test_macro_timing_pure():
    a = macro_timing(mk_point(AL=64, LSL=4, PC=8, PL=2, TL=64))
    b = macro_timing(mk_point(AL=64, LSL=4, PC=8, PL=2, TL=64))
    assert a == b


def test_fill_drain_zero_at_pl0():
    assert macro_timing(mk_point(PL=0)).fill_drain == 0
