"""Acceptance gate: the eight release criteria, one pass/fail line each.

Every criterion prints a single verdict line (run pytest with -s to see
them all); a failed assertion marks the criterion red without weakening
the check.
"""

import time

import numpy as np
import pytest

from comet.cnn_model import build_modified_lenet5, infer, infer_oracle, \
    model_cycles
from comet.fxp import FxpFormat
from comet.gemm_core import GemmConfig, im2col
from comet.im2col_addr import run_layer
from comet.lut_arch import (
    HYBRID,
    KINDS,
    PARALLEL,
    SHARED,
    SPLIT,
    LutArch,
    PreparedLut,
    lut_cost,
)
from comet.metrics import ResourceReport, aep, ens, eps, throughput_mac
from comet.obc_ipc import IpcProblem, Scheme, build_naive_lut, ipc_obc, \
    ipc_oracle
from comet.tensor_io import SplitMix64, gen_input, gen_weights, read_cbt, \
    write_cbt

GOLDEN_WEIGHT_DIGEST = \
    "56cc789ae00235e29ed55ee68f86097e1e29d629defa24025e03b7a8d519b508"


def _verdict(num: int, name: str, ok: bool, detail: str = "") -> None:
    tag = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"\n[criterion {num}] {tag}: {name}{suffix}")


def test_criterion_1_ipc_oracle_equivalence():
    """Randomized DA-vs-oracle sweep over schemes, techniques, and widths."""
    trials = 10_000
    shapes = [(4, 8, 8), (8, 16, 8), (16, 16, 4), (16, 8, 4)]
    t0 = time.perf_counter()
    mismatches = 0
    total = 0
    for k, b1, b2 in shapes:
        fmt_in, fmt_wt = FxpFormat(b1), FxpFormat(b2)
        for scheme in (Scheme.A, Scheme.B):
            for arch in KINDS:
                rng = SplitMix64(k * 1000 + b1 * 10 + b2)
                for _ in range(trials):
                    w = [rng.next_int(b2) for _ in range(k)]
                    x = [rng.next_int(b1) for _ in range(k)]
                    bias = rng.next_int(b2)
                    prob = IpcProblem.from_vectors(w, x, bias, scheme,
                                                   fmt_in, fmt_wt)
                    got, _ = ipc_obc(prob, arch, record=False)
                    total += 1
                    mismatches += got != ipc_oracle(w, x, bias)
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 60
    _verdict(1, "inner-product oracle equivalence", ok,
             f"{total} trials, {mismatches} mismatches, {elapsed:.1f}s")
    assert mismatches == 0
    assert elapsed < 60


def test_criterion_2_lut_structural_equivalence():
    """All four techniques equal the dense table on every address."""
    t0 = time.perf_counter()
    bad = 0
    checked = 0
    for k in (2, 4, 6, 8, 10):
        coeffs = [((53 * i + 29) % 255) - 127 for i in range(k)]
        naive = build_naive_lut(coeffs)
        luts = {kind: PreparedLut(kind, coeffs) for kind in KINDS}
        mask = (1 << k) - 1
        for addr in range(1 << k):
            want = naive(addr)
            checked += 1
            # mirror antisymmetry of the dense table itself
            bad += naive(addr ^ mask) != -want
            for kind, lut in luts.items():
                val, trace = lut.eval(addr, record=True)
                bad += val != want
                if kind == SPLIT:
                    bad += trace["left"] + trace["right"] != val
                elif kind == HYBRID:
                    pairs = sum(v for n, v in trace.nodes.items()
                                if n.endswith(".value") and n != "value")
                    bad += pairs != val
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 30
    _verdict(2, "structural LUT equivalence", ok,
             f"{checked} addresses, {bad} violations, {elapsed:.1f}s")
    assert bad == 0
    assert elapsed < 30


def test_criterion_3_cost_table_regression():
    """Closed-form adder/mux counts, including the published ranking."""
    failures = []
    if lut_cost(LutArch(PARALLEL, 4, 1, 4)).adders != 10:
        failures.append("parallel K=4 adders")
    if lut_cost(LutArch(PARALLEL, 4, 1, 4)).muxes_2to1 != 7:
        failures.append("parallel K=4 muxes")
    if lut_cost(LutArch(HYBRID, 4, 1, 4)).adders != 4:
        failures.append("hybrid K=4 adders")
    if lut_cost(LutArch(HYBRID, 4, 1, 4)).muxes_2to1 != 7:
        failures.append("hybrid K=4 muxes")
    q = 4
    for k in (4, 8, 16, 32):
        p = k // q
        costs = {kind: lut_cost(LutArch(kind, k, p, q)) for kind in KINDS}
        if costs[PARALLEL].adders != (2 ** 3 + 2) * p + p - 1:
            failures.append(f"parallel K={k} closed form")
        if costs[SHARED].adders != (2 ** 2 + 2) * p + p - 1:
            failures.append(f"shared K={k} closed form")
        if costs[SPLIT].adders != 3 * p + p - 1:
            failures.append(f"split K={k} closed form")
        if costs[HYBRID].adders != 4 * p + p - 1:
            failures.append(f"hybrid K={k} closed form")
        ranking = [costs[HYBRID].adders, costs[SPLIT].adders,
                   costs[SHARED].adders, costs[PARALLEL].adders]
        if ranking != sorted(ranking):
            failures.append(
                f"adder ranking hybrid<=split<=shared<=parallel at K={k}: "
                f"{ranking}")
    ok = not failures
    _verdict(3, "cost-table regression and adder ranking", ok,
             "; ".join(failures) if failures else "all closed forms exact")
    assert not failures, failures


def test_criterion_4_addrgen_equivalence():
    """Counter-generated read stream equals the im2col reference."""
    t0 = time.perf_counter()
    k_hw = 16
    problems = []
    model = build_modified_lenet5()
    for li, lay in enumerate(model.layers):
        if lay.kind != "conv":
            continue
        cfg = lay.cfg
        x = gen_input(li, (cfg.c, cfg.h, cfg.w), cfg.b)
        flat = x.reshape(-1)
        stream, writes = [], []
        carries = {1: 0, 2: 0, 3: 0, 4: 0}
        for _, events in run_layer(cfg, k_hw):
            for ev in events:
                if ev.kind == "read_x":
                    stream.append(int(flat[ev.addr]))
                elif ev.kind == "read_x_pad":
                    stream.append(0)
                elif ev.kind == "write_y":
                    writes.append(ev.addr)
                elif ev.kind == "carry":
                    carries[ev.level] += 1
        ref = im2col(x, cfg)
        per_pos = cfg.tiles(k_hw) * k_hw
        hw = cfg.h_out * cfg.w_out
        got = np.array(stream).reshape(cfg.n, hw, per_pos)
        if not all((got[ch, :, :cfg.patch_len] == ref.T).all()
                   for ch in range(cfg.n)):
            problems.append(f"layer {li} stream")
        expect = {1: cfg.tiles(k_hw) * hw * cfg.n, 2: hw * cfg.n,
                  3: cfg.n, 4: 1}
        if carries != expect:
            problems.append(f"layer {li} carries {carries} != {expect}")
        if sorted(writes) != list(range(cfg.n * hw)):
            problems.append(f"layer {li} writes not bijective")
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 10
    _verdict(4, "address-generator equivalence", ok,
             "; ".join(problems) if problems else f"{elapsed:.1f}s")
    assert not problems, problems
    assert elapsed < 10


def test_criterion_5_end_to_end_inference():
    """100 seeded inputs, both width pairs, both schemes, all techniques."""
    t0 = time.perf_counter()
    seeds = range(100)
    configs = []
    for b1 in (8, 16):
        model = build_modified_lenet5(b1, 8)
        weights = gen_weights(42, model, 8)
        configs.append((model, weights, b1))
    failures = []
    runs = 0
    nonzero_logit_runs = 0
    for seed in seeds:
        for model, weights, b1 in configs:
            x = gen_input(seed, (1, 32, 32), b1)
            want = infer_oracle(model, weights, x)
            for scheme in (Scheme.A, Scheme.B):
                for arch in KINDS:
                    cfg = GemmConfig(k_hw=16, l=10, scheme=scheme, arch=arch)
                    res = infer(model, weights, x, cfg)
                    runs += 1
                    nonzero_logit_runs += any(v != 0 for v in res.logits)
                    if res.logits != want:
                        failures.append((seed, b1, scheme.value, arch))
                    if res.total_cycles != model_cycles(model, cfg):
                        failures.append((seed, b1, scheme.value, arch,
                                         "cycles"))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 120 and nonzero_logit_runs == runs
    _verdict(5, "end-to-end inference equivalence", ok,
             f"{runs} runs, {len(failures)} failures, {elapsed:.1f}s")
    assert not failures, failures[:5]
    assert nonzero_logit_runs == runs  # exactness is not vacuous
    assert elapsed < 120


def test_criterion_6_metric_values():
    """Published efficiency numbers reproduce from the closed forms."""
    checks = {
        "ens": abs(ens(ResourceReport(luts=16406)) - 4102) <= 0.5,
        "eps": abs(eps(0.976, 0.38) - 2.568) <= 0.001,
        "aep": abs(aep(0.2e9, 100e6, 4102) - 0.488) <= 0.001,
        "tput_a": abs(throughput_mac(16, 1, 8, 100e6) / 1e9 - 0.2) <=
        0.2 * 0.005,
        "tput_b": abs(throughput_mac(16, 1, 4, 95e6) / 1e9 - 0.38) <=
        0.38 * 0.005,
    }
    bad = [k for k, v in checks.items() if not v]
    _verdict(6, "published metric values", not bad,
             "; ".join(bad) if bad else "ENS/EPS/AEP/throughput exact")
    assert not bad, bad


def test_criterion_7_scheme_cycle_asymmetry():
    """At B1=16, B2=8 the weight-serial scheme takes exactly half the cycles."""
    model = build_modified_lenet5(16, 8)
    weights = gen_weights(42, model, 8)
    x = gen_input(0, (1, 32, 32), 16)
    cyc = {}
    for scheme in (Scheme.A, Scheme.B):
        cfg = GemmConfig(k_hw=16, l=10, scheme=scheme, arch="hybrid")
        cyc[scheme] = infer(model, weights, x, cfg).total_cycles
    ok = cyc[Scheme.A] == 2 * cyc[Scheme.B]
    _verdict(7, "scheme cycle asymmetry", ok,
             f"A={cyc[Scheme.A]}, B={cyc[Scheme.B]}")
    assert ok


def test_criterion_8_format_stability(tmp_path):
    """Container round-trip plus the committed weight-bundle digest."""
    rng = SplitMix64(77)
    t = rng.fill((3, 5, 7), 16)
    p = tmp_path / "t.cbt"
    write_cbt(t, p)
    first = p.read_bytes()
    back = read_cbt(p)
    write_cbt(back.astype(t.dtype), p)
    round_trip_ok = (back == t).all() and p.read_bytes() == first
    digest = gen_weights(42, build_modified_lenet5(8, 8), 8).digest()
    digest_ok = digest == GOLDEN_WEIGHT_DIGEST
    ok = bool(round_trip_ok) and digest_ok
    _verdict(8, "serialization format stability", ok,
             f"digest {digest[:16]}...")
    assert round_trip_ok
    assert digest_ok
