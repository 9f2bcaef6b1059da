"""Structural emulations of the four dynamic LUT generation techniques.

Each technique (parallel, shared, split, hybrid) produces, for every
address, the same value a naive 2**K offset-binary table would hold:

    value(addr) = sum_i coeff_i * (2*b_i - 1)

with b_1 the most-significant address bit.  What differs is the internal
structure: which partial sums exist as real nodes and get shared.  The
emulation computes those nodes explicitly so structural claims (node
sharing, half sums, pair nodes) are testable, and a closed-form cost
model reports adder/mux counts and critical-path delay per technique.

Coefficient vectors whose length is not a multiple of the group size are
zero-padded at the tail; a zero coefficient with a zero address bit
contributes 0*(2*0-1) = 0, leaving every value unchanged.
"""

import math
from dataclasses import dataclass, field

PARALLEL = "parallel"
SHARED = "shared"
SPLIT = "split"
HYBRID = "hybrid"
KINDS = (PARALLEL, SHARED, SPLIT, HYBRID)


class FactorizationError(ValueError):
    """Raised when (p, q) does not factor K or violates a technique's shape."""


@dataclass(frozen=True)
class LutArch:
    """One of the four LUT techniques with its K = p*q factorization."""

    kind: str
    k: int
    p: int
    q: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown LUT kind {self.kind!r}")
        if self.p < 1 or self.q < 1 or self.p * self.q != self.k:
            raise FactorizationError(
                f"K={self.k} does not factor as p*q with p={self.p}, q={self.q}"
            )
        if self.kind == SPLIT and self.q % 2 != 0:
            raise FactorizationError(f"split LUT needs even q, got q={self.q}")
        if self.kind == HYBRID and (self.q < 2 or self.q % 2 != 0):
            raise FactorizationError(f"hybrid LUT needs even q >= 2, got q={self.q}")


@dataclass
class LutCost:
    """Adder/mux/gate counts and CPD for one LutArch (closed forms)."""

    adders: int
    muxes_2to1: int
    cpd_adders: float        # multiples of T_A, exact q + log2(p) form
    cpd_adders_ceil: int     # same with ceil(log2 p) for non-power-of-two p
    cpd_muxes: int           # multiples of T_MX
    and_gates: int = 0       # hybrid select logic only
    xor_gates: float = 0.0   # hybrid select logic only; q*p/4 as printed


@dataclass
class StructTrace:
    """Named internal node values observed during one evaluation."""

    nodes: dict[str, int] = field(default_factory=dict)

    def __getitem__(self, name: str) -> int:
        return self.nodes[name]

    def names(self) -> list[str]:
        return sorted(self.nodes)


def _padded_layout(k: int, q: int | None) -> tuple[int, int]:
    """Pick (padded length, group size) for a coefficient vector of length k."""
    if q is not None:
        if q < 1 or k % q != 0:
            raise FactorizationError(f"q={q} does not divide K={k}")
        return k, q
    if k >= 4:
        return -(-k // 4) * 4, 4
    return -(-k // 2) * 2, 2


class PreparedLut:
    """A LUT technique bound to one coefficient vector, evaluable per address.

    Precomputes the shared structure (group slices, hybrid pair nodes) so
    repeated evaluation inside shift-accumulate loops stays cheap.
    """

    def __init__(self, kind: str, coeffs: list[int], q: int | None = None):
        if kind not in KINDS:
            raise ValueError(f"unknown LUT kind {kind!r}")
        self.kind = kind
        self.k = len(coeffs)
        if self.k < 1:
            raise ValueError("need at least one coefficient")
        kk, qq = _padded_layout(self.k, q)
        if kind in (SPLIT, HYBRID) and qq % 2 != 0:
            raise FactorizationError(f"{kind} LUT needs even q, got q={qq}")
        self.q = qq
        self.padded = list(coeffs) + [0] * (kk - self.k)
        self.p = kk // qq
        self.groups = [self.padded[g * qq:(g + 1) * qq] for g in range(self.p)]
        if kind == HYBRID:
            # pair nodes theta_j + theta_{j+1} / theta_j - theta_{j+1},
            # shared across addresses (independent of select lines)
            self.pair_sum = [
                self.padded[j] + self.padded[j + 1] for j in range(0, kk, 2)
            ]
            self.pair_diff = [
                self.padded[j] - self.padded[j + 1] for j in range(0, kk, 2)
            ]
        self._eval = getattr(self, f"_eval_{kind}")

    def _bits(self, address: int) -> list[int]:
        if not 0 <= address < (1 << self.k):
            raise ValueError(f"address {address} outside [0, 2^{self.k})")
        k = self.k
        bits = [(address >> (k - 1 - i)) & 1 for i in range(k)]
        bits.extend([0] * (len(self.padded) - k))
        return bits

    def eval(self, address: int, record: bool = False):
        return self._eval(self._bits(address), record)

    def value(self, address: int) -> int:
        return self._eval(self._bits(address), False)[0]

    # -- parallel: chain adders per group, plus the derive-from-address-0 path

    def _eval_parallel(self, bits, record):
        trace = StructTrace() if record else None
        total = 0
        for g, (th, bs) in enumerate(zip(self.groups, self._group_bits(bits))):
            acc = 0
            for j in range(self.q - 1, -1, -1):
                acc += th[j] if bs[j] else -th[j]
                if record:
                    trace.nodes[f"g{g}.chain{j}"] = acc
            total += acc
            if record:
                # alternate path: address-0 content plus 2*theta per set bit
                base = -sum(th)
                alt = base + 2 * sum(t for t, b in zip(th, bs) if b)
                trace.nodes[f"g{g}.from_zero"] = alt
                trace.nodes[f"g{g}.value"] = acc
        if record:
            trace.nodes["value"] = total
        return total, trace

    # -- shared: mirror-antisymmetric sub-table over bits 2..q, mux on b_2

    def _eval_shared(self, bits, record):
        trace = StructTrace() if record else None
        total = 0
        for g, (th, bs) in enumerate(zip(self.groups, self._group_bits(bits))):
            head = th[0] if bs[0] else -th[0]
            sub = bs[1:]
            if sub:
                flip = sub[0] == 1
                canon = [1 - b for b in sub] if flip else sub
                node = 0
                for j in range(len(canon) - 1, -1, -1):
                    node += th[j + 1] if canon[j] else -th[j + 1]
                val = head + (-node if flip else node)
                if record:
                    key = "".join(map(str, canon))
                    trace.nodes[f"g{g}.sub{key}"] = node
            else:
                val = head
            total += val
            if record:
                trace.nodes[f"g{g}.value"] = val
        if record:
            trace.nodes["value"] = total
        return total, trace

    # -- split: two q/2-wide halves with internal mirroring, one join adder

    def _eval_split(self, bits, record):
        trace = StructTrace() if record else None
        total = 0
        left_total = 0
        right_total = 0
        h = self.q // 2
        for g, (th, bs) in enumerate(zip(self.groups, self._group_bits(bits))):
            halves = []
            for side, (sth, sbs) in enumerate(
                ((th[:h], bs[:h]), (th[h:], bs[h:]))
            ):
                flip = sbs[0] == 1
                canon = [1 - b for b in sbs] if flip else sbs
                node = 0
                for j in range(len(canon) - 1, -1, -1):
                    node += sth[j] if canon[j] else -sth[j]
                halves.append(-node if flip else node)
                if record:
                    key = "".join(map(str, canon))
                    name = "left" if side == 0 else "right"
                    trace.nodes[f"g{g}.{name}_sub{key}"] = node
            val = halves[0] + halves[1]
            total += val
            left_total += halves[0]
            right_total += halves[1]
            if record:
                trace.nodes[f"g{g}.left"] = halves[0]
                trace.nodes[f"g{g}.right"] = halves[1]
                trace.nodes[f"g{g}.value"] = val
        if record:
            trace.nodes["left"] = left_total
            trace.nodes["right"] = right_total
            trace.nodes["value"] = total
        return total, trace

    # -- hybrid: precomputed pair sum/diff nodes muxed by XOR/AND select logic

    def _eval_hybrid(self, bits, record):
        trace = StructTrace() if record else None
        total = 0
        for j, (s, d) in enumerate(zip(self.pair_sum, self.pair_diff)):
            ba, bb = bits[2 * j], bits[2 * j + 1]
            node = d if ba ^ bb else s
            total += node if ba else -node
            if record:
                trace.nodes[f"pair{j}.sum"] = s
                trace.nodes[f"pair{j}.diff"] = d
                trace.nodes[f"pair{j}.sel"] = ba ^ bb
                trace.nodes[f"pair{j}.value"] = node if ba else -node
        if record:
            trace.nodes["value"] = total
        return total, trace

    def _group_bits(self, bits):
        q = self.q
        return [bits[g * q:(g + 1) * q] for g in range(self.p)]


def eval_parallel(coeffs, address, q=None):
    return PreparedLut(PARALLEL, coeffs, q).eval(address, record=True)


def eval_shared(coeffs, address, q=None):
    return PreparedLut(SHARED, coeffs, q).eval(address, record=True)


def eval_split(coeffs, address, q=None):
    return PreparedLut(SPLIT, coeffs, q).eval(address, record=True)


def eval_hybrid(coeffs, address, q=None):
    return PreparedLut(HYBRID, coeffs, q).eval(address, record=True)


def lut_cost(arch: LutArch) -> LutCost:
    """Adder/mux/CPD complexity of one technique at K = p*q."""
    p, q = arch.p, arch.q
    log2p = math.log2(p)
    clog2p = math.ceil(log2p)
    if arch.kind == PARALLEL:
        return LutCost(
            adders=(2 ** (q - 1) + q - 2) * p + p - 1,
            muxes_2to1=(2 ** (q - 1) - 1) * p,
            cpd_adders=q + log2p,
            cpd_adders_ceil=q + clog2p,
            cpd_muxes=0,
        )
    if arch.kind == SHARED:
        return LutCost(
            adders=(2 ** (q - 2) + q - 2) * p + p - 1,
            muxes_2to1=2 ** (q - 2) * p,
            cpd_adders=q + log2p,
            cpd_adders_ceil=q + clog2p,
            cpd_muxes=0,
        )
    if arch.kind == SPLIT:
        return LutCost(
            adders=(2 * (2 ** (q // 2 - 1) - 1) + 1) * p + p - 1,
            muxes_2to1=2 * (2 ** (q // 2)) * p,
            cpd_adders=q / 2 + 1 + log2p,
            cpd_adders_ceil=q // 2 + 1 + clog2p,
            cpd_muxes=1,
        )
    # hybrid; mux count 3(q-2)+1 as printed, independent of p
    return LutCost(
        adders=q * p + p - 1,
        muxes_2to1=3 * (q - 2) + 1,
        cpd_adders=2 + log2p,
        cpd_adders_ceil=2 + clog2p,
        cpd_muxes=2,
        and_gates=q * p // 2,
        xor_gates=q * p / 4,
    )


def split_total_adders(k: int, split_point: int) -> int:
    """Adder count of a split LUT at an arbitrary split point (p = 1).

    Used to check that the equal-halves split minimizes total adders.
    """
    if not 1 <= split_point <= k - 1:
        raise ValueError(f"split point {split_point} outside [1, {k - 1}]")
    return (2 ** (split_point - 1) + 2 ** (k - split_point - 1) - 2) + (k - 2)
