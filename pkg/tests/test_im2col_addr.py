"""Hierarchical-counter address generator vs. the im2col reference."""

import numpy as np
import pytest

from comet.cnn_model import build_modified_lenet5
from comet.gemm_core import im2col
from comet.im2col_addr import (
    AddrEvent,
    CounterState,
    GroupCtx,
    LayerConfigWord,
    bias_enable,
    read_addresses,
    run_layer,
    step,
    write_address,
)
from comet.tensor_io import gen_input

CONV_LAYERS = [lay.cfg for lay in build_modified_lenet5().layers
               if lay.kind == "conv"]


def _collect(cfg, k_hw):
    events_by_kind = {}
    stream = []
    writes = []
    carries = {1: 0, 2: 0, 3: 0, 4: 0}
    x = gen_input(7, (cfg.c, cfg.h, cfg.w), cfg.b)
    flat = x.reshape(-1)
    for _, events in run_layer(cfg, k_hw):
        for ev in events:
            events_by_kind.setdefault(ev.kind, 0)
            events_by_kind[ev.kind] += 1
            if ev.kind == "read_x":
                stream.append(int(flat[ev.addr]))
            elif ev.kind == "read_x_pad":
                stream.append(0)
            elif ev.kind == "write_y":
                writes.append(ev.addr)
            elif ev.kind == "carry":
                carries[ev.level] += 1
    return x, stream, writes, carries, events_by_kind


@pytest.mark.parametrize("cfg", CONV_LAYERS, ids=lambda c: f"c{c.c}k{c.kh}s{c.s}")
@pytest.mark.parametrize("k_hw", [16])
def test_stream_matches_im2col(cfg, k_hw):
    x, stream, _, _, _ = _collect(cfg, k_hw)
    ref = im2col(x, cfg)
    per_pos = cfg.tiles(k_hw) * k_hw
    m = cfg.h_out * cfg.w_out
    got = np.array(stream).reshape(cfg.n, m, per_pos)
    for ch in range(cfg.n):
        assert (got[ch, :, :cfg.patch_len] == ref.T).all()
        assert (got[ch, :, cfg.patch_len:] == 0).all()   # tile-tail zeros


@pytest.mark.parametrize("cfg", CONV_LAYERS, ids=lambda c: f"c{c.c}k{c.kh}s{c.s}")
def test_carry_counts(cfg):
    k_hw = 16
    _, _, _, carries, _ = _collect(cfg, k_hw)
    hw = cfg.h_out * cfg.w_out
    assert carries[1] == cfg.tiles(k_hw) * hw * cfg.n
    assert carries[2] == hw * cfg.n
    assert carries[3] == cfg.n
    assert carries[4] == 1


@pytest.mark.parametrize("cfg", CONV_LAYERS, ids=lambda c: f"c{c.c}k{c.kh}s{c.s}")
def test_write_addresses_bijective(cfg):
    _, _, writes, _, _ = _collect(cfg, 16)
    n_out = cfg.n * cfg.h_out * cfg.w_out
    assert len(writes) == n_out
    assert sorted(writes) == list(range(n_out))


def test_read_addresses_example():
    """Fetching the 12th word of the 3rd tile at position 5, channel 1."""
    cfg = CONV_LAYERS[2]  # 6x5x5 patch: Np = 150, 10 tiles of 16
    state = CounterState(11, GroupCtx(2, 5, 1, 0), None, None)
    ra = read_addresses(state, cfg, 16)
    idx = 2 * 16 + 11  # = 43: channel 1, kernel row 3, col 3
    assert ra["theta"] == 1 * cfg.patch_len + idx
    ch, rem = divmod(idx, 25)
    k, l = divmod(rem, 5)
    oh, ow = divmod(5, cfg.w_out)
    assert ra["x"] == ch * cfg.h * cfg.w + (oh + k) * cfg.w + (ow + l)
    assert ra["beta"] is None  # not the last tile


def test_beta_read_only_on_last_tile_start():
    cfg = CONV_LAYERS[0]  # Np = 25, 2 tiles of 16
    last = cfg.tiles(16) - 1
    assert read_addresses(CounterState(0, GroupCtx(last, 3, 2, 0), None, None),
                          cfg, 16)["beta"] == 2
    assert read_addresses(CounterState(1, GroupCtx(last, 3, 2, 0), None, None),
                          cfg, 16)["beta"] is None
    assert read_addresses(CounterState(0, GroupCtx(0, 3, 2, 0), None, None),
                          cfg, 16)["beta"] is None


def test_tail_reads_are_pad():
    cfg = CONV_LAYERS[0]  # Np = 25; tile 1 indices 25..31 are tail
    state = CounterState(9, GroupCtx(1, 0, 0, 0), None, None)
    ra = read_addresses(state, cfg, 16)
    assert ra["x"] == "pad" and ra["theta"] is None


def test_padding_reads_bottom_right():
    cfg = CONV_LAYERS[1]  # 3x3 stride 2, one-sided padding on 28x28
    # last output position touches the padded column/row
    pos = cfg.h_out * cfg.w_out - 1
    pads = 0
    state = CounterState(0, GroupCtx(0, pos, 0, 0), None, None)
    for _ in range(16):
        ra = read_addresses(state, cfg, 16)
        if ra["x"] == "pad" and ra["theta"] is not None:
            pads += 1
        state = CounterState(state.cntr0 + 1, state.rd, None, None)
    assert pads > 0


def test_carry1_boundary():
    cfg = CONV_LAYERS[0]
    state = CounterState(15, GroupCtx(0, 0, 0, 0), None, None)
    nxt, events = step(state, cfg, 16)
    kinds = [e.kind for e in events]
    assert AddrEvent("carry", level=1) in events
    assert nxt.cntr0 == 0
    assert nxt.rd.tile == 1
    assert "handoff" in kinds


def test_handoff_pipeline_order():
    """Contexts move read -> calculate -> write, one tile per carry."""
    cfg = CONV_LAYERS[0]
    state = CounterState.initial()
    seen = []
    for _ in range(16 * 3):
        prev = state
        state, _ = step(state, cfg, 16)
        if state.cntr0 == 0:
            seen.append((prev.rd, state.cal, state.wr))
    # after the first carry, cal holds the context read just before it
    assert seen[0][1] == GroupCtx(0, 0, 0, 0) and seen[0][2] is None
    assert seen[1][1] == GroupCtx(1, 0, 0, 0)
    assert seen[1][2] == GroupCtx(0, 0, 0, 0)


def test_bias_enable_on_last_tile_in_cal():
    cfg = CONV_LAYERS[0]  # 2 tiles
    s0 = CounterState(0, GroupCtx(0, 0, 0, 0), None, None)
    assert not bias_enable(s0, cfg, 16)
    s1 = CounterState(0, GroupCtx(0, 1, 0, 0), GroupCtx(1, 0, 0, 0), None)
    assert bias_enable(s1, cfg, 16)
    s2 = CounterState(0, GroupCtx(1, 0, 0, 0), GroupCtx(0, 0, 0, 0), None)
    assert not bias_enable(s2, cfg, 16)


def test_bias_enable_pattern_many_tiles():
    """With 10 tiles per position, bias fires on exactly one tile in ten."""
    cfg = CONV_LAYERS[2]  # Np = 150 -> 10 tiles of 16
    fires = 0
    total = 0
    state = CounterState.initial()
    for _ in range(16 * 10 * 3):  # three full positions
        state, _ = step(state, cfg, 16)
        if state.cntr0 == 0:
            total += 1
            fires += bias_enable(state, cfg, 16)
    assert total == 30 and fires == 3


def test_write_address_row_major():
    cfg = CONV_LAYERS[0]  # 28x28 outputs
    assert write_address(GroupCtx(0, 0, 0, 0), cfg) == 0
    assert write_address(GroupCtx(0, 29, 0, 0), cfg) == 29
    assert write_address(GroupCtx(0, 0, 2, 0), cfg) == 2 * 28 * 28


def test_step_after_done_raises():
    cfg = LayerConfigWord(c=1, kh=1, kw=1, s=1, p=0, n=1, b=8, h=1, w=1)
    state = CounterState.initial()
    state, events = step(state, cfg, 1)
    assert state.done
    with pytest.raises(ValueError):
        step(state, cfg, 1)


def test_layer_config_validation():
    with pytest.raises(ValueError):
        LayerConfigWord(c=1, kh=3, kw=3, s=3, p=0, n=1, b=8, h=8, w=8)
    with pytest.raises(ValueError):
        LayerConfigWord(c=1, kh=3, kw=3, s=1, p=2, n=1, b=8, h=8, w=8)
    with pytest.raises(ValueError):
        LayerConfigWord(c=1, kh=9, kw=9, s=1, p=0, n=1, b=8, h=8, w=8)
    cfg = LayerConfigWord(c=6, kh=5, kw=5, s=1, p=0, n=16, b=8, h=14, w=14)
    assert cfg.h_out == 10 and cfg.w_out == 10
    assert cfg.patch_len == 150
    assert cfg.tiles(16) == 10
