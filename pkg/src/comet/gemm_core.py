"""Tiled OBC GEMM: im2col lowering, PISO bit-serialization, lane accounting.

Matrix products are computed tile-by-tile through the offset-binary
shift-accumulate datapath and must equal the direct integer GEMM oracle
bit-exactly.  Two engines share that contract:

* a scalar reference engine built on :func:`comet.obc_ipc.ipc_obc`, which
  produces per-slice traces, and
* a vectorized engine that evaluates each LUT technique's dataflow with
  numpy across whole rows/columns; it is the default because full-model
  inference would otherwise be impractically slow.

Both are cross-checked in the test suite; `record=True` selects the
scalar engine.
"""

import math
from dataclasses import dataclass

import numpy as np

from .fxp import FxpFormat
from .im2col_addr import LayerConfigWord
from .lut_arch import HYBRID, KINDS, PARALLEL, SHARED, SPLIT
from .obc_ipc import IpcProblem, Scheme, ipc_obc


@dataclass(frozen=True)
class GemmConfig:
    """Engine shape: lane IPC length, lane count, scheme, LUT technique."""

    k_hw: int = 16
    l: int = 10
    scheme: Scheme = Scheme.A
    arch: str | None = HYBRID   # None = naive dense table
    b1: int = 8
    b2: int = 8
    f_clk: float | None = None

    def __post_init__(self):
        if self.k_hw < 1 or self.l < 1:
            raise ValueError("k_hw and l must be positive")
        if self.arch is not None and self.arch not in KINDS + ("naive",):
            raise ValueError(f"unknown LUT technique {self.arch!r}")

    @property
    def serial_bits(self) -> int:
        return self.b1 if self.scheme is Scheme.A else self.b2


# preset engine shapes matching the reported K*L = 16 throughput rows
PRESETS = {
    "k16l1": dict(k_hw=16, l=1),
    "k4l4": dict(k_hw=4, l=4),
}


@dataclass(frozen=True)
class TilePlan:
    """How a patch of length `patch_len` is cut into k_hw-wide tiles."""

    patch_len: int
    k_hw: int
    tiles: int
    tail_pad: int

    @classmethod
    def for_patch(cls, patch_len: int, k_hw: int) -> "TilePlan":
        tiles = -(-patch_len // k_hw)
        return cls(patch_len, k_hw, tiles, tiles * k_hw - patch_len)


def im2col(x: np.ndarray, cfg: LayerConfigWord) -> np.ndarray:
    """Flatten convolution patches of `x` (C, H, W) into an (Np, M) matrix.

    Column (oh, ow) holds the channel-major patch at that output position;
    one-sided zero padding extends the bottom/right edge when cfg.p == 1.
    """
    x = np.asarray(x)
    if x.shape != (cfg.c, cfg.h, cfg.w):
        raise ValueError(f"input shape {x.shape} != {(cfg.c, cfg.h, cfg.w)}")
    if cfg.p:
        x = np.pad(x, ((0, 0), (0, cfg.p), (0, cfg.p)))
    cols = np.empty((cfg.patch_len, cfg.h_out * cfg.w_out), dtype=np.int64)
    m = 0
    for oh in range(cfg.h_out):
        for ow in range(cfg.w_out):
            hh, ww = oh * cfg.s, ow * cfg.s
            cols[:, m] = x[:, hh:hh + cfg.kh, ww:ww + cfg.kw].reshape(-1)
            m += 1
    return cols


def piso_schedule(operands, b: int) -> list[int]:
    """Transpose operand words into per-slice LUT addresses, LSB slice first.

    Address bit order puts operand 0 at the most significant position.
    """
    ops = [int(v) for v in operands]
    lo, hi = -(1 << (b - 1)), (1 << (b - 1)) - 1
    for v in ops:
        if not lo <= v <= hi:
            raise ValueError(f"operand {v} does not fit {b} bits")
    addrs = []
    for r in range(b - 1, -1, -1):
        shift = b - 1 - r
        addr = 0
        for v in ops:
            addr = (addr << 1) | ((v >> shift) & 1)
        addrs.append(addr)
    return addrs


def gemm_oracle(theta: np.ndarray, xcols: np.ndarray,
                bias: np.ndarray) -> np.ndarray:
    """Direct integer matrix product: the ground truth for gemm_obc."""
    theta = np.asarray(theta, dtype=np.int64)
    xcols = np.asarray(xcols, dtype=np.int64)
    bias = np.asarray(bias, dtype=np.int64)
    return theta @ xcols + bias[:, None]


def gemm_cycles(n: int, m: int, patch_len: int, cfg: GemmConfig) -> int:
    """Closed-form cycle count: M * tiles * B_serial * ceil(N / L)."""
    tiles = -(-patch_len // cfg.k_hw)
    return m * tiles * cfg.serial_bits * (-(-n // cfg.l))


def _pad_cols(a: np.ndarray, rows: int) -> np.ndarray:
    if a.shape[0] == rows:
        return a
    return np.pad(a, ((0, rows - a.shape[0]),) + ((0, 0),) * (a.ndim - 1))


def _vec_lut_value(kind: str | None, c2: np.ndarray, bits2: np.ndarray,
                   q: int) -> np.ndarray:
    """Evaluate one LUT technique's dataflow with broadcasting.

    `c2` holds coefficients and `bits2` address bits; axis 0 of both is
    the (zero-padded) k' = p*q coefficient axis, and any trailing axes
    broadcast against each other in the result.
    """
    sgn = 2 * bits2 - 1
    if kind in (None, "naive", PARALLEL):
        # chain adders reduce to the signed sum within each group
        return (c2 * sgn).sum(axis=0)
    p = c2.shape[0] // q
    if kind == HYBRID:
        s = c2[0::2] + c2[1::2]
        d = c2[0::2] - c2[1::2]
        ba, bb = bits2[0::2], bits2[1::2]
        node = np.where((ba ^ bb) == 1, d, s)
        return np.where(ba == 1, node, -node).sum(axis=0)
    cg = c2.reshape((p, q) + c2.shape[1:])
    bg = bits2.reshape((p, q) + bits2.shape[1:])
    if kind == SHARED:
        head = cg[:, 0] * (2 * bg[:, 0] - 1)
        flip = bg[:, 1]
        canon = bg[:, 1:] ^ bg[:, 1:2]
        node = ((2 * canon - 1) * cg[:, 1:]).sum(axis=1)
        return (head + (1 - 2 * flip) * node).sum(axis=0)
    if kind == SPLIT:
        h = q // 2
        ch = cg.reshape((p, 2, h) + c2.shape[1:])
        bh = bg.reshape((p, 2, h) + bits2.shape[1:])
        flip = bh[:, :, 0]
        canon = bh ^ bh[:, :, 0:1]
        node = ((2 * canon - 1) * ch).sum(axis=2)
        return ((1 - 2 * flip) * node).sum(axis=(0, 1))
    raise ValueError(f"unknown LUT technique {kind!r}")


def _group_size(k: int) -> int:
    return 4 if k >= 4 else 2


def gemm_obc(theta: np.ndarray, xcols: np.ndarray, bias: np.ndarray,
             cfg: GemmConfig, record: bool = False):
    """OBC GEMM: Y[n, m] = sum_k theta[n, k] * xcols[k, m] + bias[n].

    Each patch is cut into k_hw-wide tiles; every tile runs one
    shift-accumulate pass with its own offset initialization, and the
    doubled bias joins the last tile's offset only.  Returns
    (Y, cycles, traces); traces is None unless `record` is set.
    """
    theta = np.asarray(theta, dtype=np.int64)
    xcols = np.asarray(xcols, dtype=np.int64)
    bias = np.asarray(bias, dtype=np.int64)
    if theta.ndim != 2 or xcols.ndim != 2 or theta.shape[1] != xcols.shape[0]:
        raise ValueError("theta (N,Np) and xcols (Np,M) shapes inconsistent")
    n_out, patch_len = theta.shape
    m_out = xcols.shape[1]
    if bias.shape != (n_out,):
        raise ValueError("bias must have one entry per output row")
    fmt_in, fmt_wt = FxpFormat(cfg.b1), FxpFormat(cfg.b2)
    if theta.size and not (theta.min() >= fmt_wt.min_value
                           and theta.max() <= fmt_wt.max_value):
        raise ValueError(f"weights exceed the {cfg.b2}-bit format")
    if xcols.size and not (xcols.min() >= fmt_in.min_value
                           and xcols.max() <= fmt_in.max_value):
        raise ValueError(f"inputs exceed the {cfg.b1}-bit format")

    plan = TilePlan.for_patch(patch_len, cfg.k_hw)
    cycles = gemm_cycles(n_out, m_out, patch_len, cfg)
    if record:
        y, traces = _gemm_scalar(theta, xcols, bias, cfg, plan,
                                 fmt_in, fmt_wt)
        return y, cycles, traces
    return _gemm_vectorized(theta, xcols, bias, cfg, plan), cycles, None


def _gemm_scalar(theta, xcols, bias, cfg, plan, fmt_in, fmt_wt):
    """Reference engine: one ipc_obc call per (row, column, tile)."""
    n_out, m_out = theta.shape[0], xcols.shape[1]
    k = plan.k_hw
    tpad = _pad_cols(theta.T, plan.tiles * k).T.tolist()
    xpad = _pad_cols(xcols, plan.tiles * k).tolist()
    y = np.zeros((n_out, m_out), dtype=np.int64)
    traces = {}
    arch = None if cfg.arch == "naive" else cfg.arch
    for n in range(n_out):
        for m in range(m_out):
            acc = 0
            for t in range(plan.tiles):
                w_tile = [tpad[n][i] for i in range(t * k, (t + 1) * k)]
                x_tile = [xpad[i][m] for i in range(t * k, (t + 1) * k)]
                tile_bias = int(bias[n]) if t == plan.tiles - 1 else 0
                prob = IpcProblem.from_vectors(
                    w_tile, x_tile, tile_bias, cfg.scheme, fmt_in, fmt_wt)
                res, trace = ipc_obc(prob, arch, record=True)
                acc += res
                traces[(n, m, t)] = trace
            y[n, m] = acc
    return y, traces


def _gemm_vectorized(theta, xcols, bias, cfg, plan):
    """Vectorized engine: same tile/slice dataflow, numpy across M (or N)."""
    n_out, m_out = theta.shape[0], xcols.shape[1]
    k = plan.k_hw
    rows = plan.tiles * k
    tpad = _pad_cols(theta.T, rows).T   # (N, rows)
    xpad = _pad_cols(xcols, rows)       # (rows, M)
    q = _group_size(k)
    kq = -(-k // q) * q
    arch = cfg.arch
    b = cfg.serial_bits
    shifts = np.arange(b, dtype=np.int64)  # LSB slice first
    y2 = np.zeros((n_out, m_out), dtype=np.int64)      # doubled domain

    if cfg.scheme is Scheme.A:
        # serial side: inputs; LUT side: one weight tile per (n, t);
        # all N rows evaluate together against the shared bit slices
        for t in range(plan.tiles):
            xt = xpad[t * k:(t + 1) * k]                       # (k, M)
            bits = ((xt[None, :, :] >> shifts[:, None, None]) & 1)  # (b,k,M)
            bits = np.ascontiguousarray(bits)
            last = t == plan.tiles - 1
            c = np.zeros((kq, n_out, 1), dtype=np.int64)
            c[:k, :, 0] = tpad[:, t * k:(t + 1) * k].T
            init = -c.sum(axis=(0, 2))                         # (N,)
            if last:
                init = init + 2 * bias
            acc = np.broadcast_to(init[:, None],
                                  (n_out, m_out)).astype(np.int64).copy()
            for j, r in enumerate(range(b - 1, -1, -1)):
                bslice = np.zeros((kq, 1, m_out), dtype=np.int64)
                bslice[:k, 0] = bits[j]
                out = _vec_lut_value(arch, c, bslice, q)       # (N, M)
                shift = b - 1 - r
                acc += (-out if r == 0 else out) << shift
            y2 += acc
    else:
        # serial side: weights; LUT side: one input tile per (m, t); each
        # weight slice's address row broadcasts against all M tile columns
        for t in range(plan.tiles):
            c = np.zeros((kq, 1, m_out), dtype=np.int64)
            c[:k, 0] = xpad[t * k:(t + 1) * k]
            csum = c.sum(axis=(0, 1))                          # (M,)
            last = t == plan.tiles - 1
            wt = tpad[:, t * k:(t + 1) * k]                    # (N, k)
            bits = ((wt[None, :, :] >> shifts[:, None, None]) & 1)  # (b,N,k)
            init = -csum[None, :] + (2 * bias[:, None] if last else 0)
            acc = np.broadcast_to(init, (n_out, m_out)).astype(np.int64).copy()
            for j, r in enumerate(range(b - 1, -1, -1)):
                bslice = np.zeros((kq, n_out, 1), dtype=np.int64)
                bslice[:k] = bits[j].T[:, :, None]
                out = _vec_lut_value(arch, c, bslice, q)       # (N, M)
                shift = b - 1 - r
                acc += (-out if r == 0 else out) << shift
            y2 += acc
    assert not np.any(y2 & 1), "doubled-domain result must be even"
    return y2 >> 1
