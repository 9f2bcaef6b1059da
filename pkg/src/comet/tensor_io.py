"""Bit-exact tensor container (CBT), weight bundles, seeded generators.

CBT is a little-endian wire format:

    magic   4 bytes  "CBT1"
    version u16
    dtype   u8       0 = i8, 1 = i16, 2 = i32
    rank    u8
    dims    rank * u32
    payload prod(dims) * dtype-size signed integers, row-major

Weight/input fixtures come from a SplitMix64 stream (standard published
constants) so identical (seed, model, width) inputs give byte-identical
bundles on every platform.
"""

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"CBT1"
VERSION = 1
_DTYPES = {0: np.int8, 1: np.int16, 2: np.int32}
_CODES = {np.dtype(np.int8): 0, np.dtype(np.int16): 1, np.dtype(np.int32): 2}


class CbtError(ValueError):
    """Base class for CBT container violations."""


class MagicMismatch(CbtError):
    pass


class Truncated(CbtError):
    pass


class RangeViolation(CbtError):
    pass


def write_cbt(tensor: np.ndarray, path) -> None:
    """Serialize an integer tensor; dtype chosen from its declared dtype."""
    tensor = np.asarray(tensor)
    dt = np.dtype(tensor.dtype)
    if dt not in _CODES:
        # pick the narrowest container that holds the values
        lo = int(tensor.min()) if tensor.size else 0
        hi = int(tensor.max()) if tensor.size else 0
        for cand in (np.int8, np.int16, np.int32):
            info = np.iinfo(cand)
            if info.min <= lo and hi <= info.max:
                dt = np.dtype(cand)
                break
        else:
            raise RangeViolation(f"values [{lo}, {hi}] exceed i32 at offset 0")
        tensor = tensor.astype(dt)
    header = MAGIC + struct.pack("<HBB", VERSION, _CODES[dt], tensor.ndim)
    header += b"".join(struct.pack("<I", d) for d in tensor.shape)
    payload = np.ascontiguousarray(tensor).astype(dt.newbyteorder("<")).tobytes()
    Path(path).write_bytes(header + payload)


def read_cbt(path) -> np.ndarray:
    """Deserialize a CBT file; errors name the offending byte offset."""
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise MagicMismatch(f"bad magic at offset 0: {data[:4]!r}")
    if len(data) < 8:
        raise Truncated(f"header cut short at offset {len(data)}")
    version, code, rank = struct.unpack("<HBB", data[4:8])
    if code not in _DTYPES:
        raise CbtError(f"unknown dtype code {code} at offset 6")
    off = 8
    if len(data) < off + 4 * rank:
        raise Truncated(f"dims cut short at offset {len(data)}")
    dims = struct.unpack(f"<{rank}I", data[off:off + 4 * rank])
    off += 4 * rank
    dt = np.dtype(_DTYPES[code]).newbyteorder("<")
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    need = count * dt.itemsize
    if len(data) != off + need:
        raise Truncated(
            f"payload is {len(data) - off} bytes at offset {off}, need {need}")
    arr = np.frombuffer(data[off:], dtype=dt).reshape(dims)
    return arr.astype(np.int64)


# -- SplitMix64: standard constants, fully deterministic across platforms

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def next_int(self, bits: int) -> int:
        """Uniform value in [-2**(bits-1), 2**(bits-1) - 1]."""
        return (self.next_u64() % (1 << bits)) - (1 << (bits - 1))

    def fill(self, shape, bits: int) -> np.ndarray:
        n = int(np.prod(shape, dtype=np.int64))
        vals = [self.next_int(bits) for _ in range(n)]
        return np.array(vals, dtype=np.int64).reshape(shape)


@dataclass
class LayerWeights:
    weight: np.ndarray
    bias: np.ndarray
    shift: int


@dataclass
class WeightBundle:
    """Per-layer weights keyed by layer index; gap layers are absent."""

    layers: dict[int, LayerWeights]

    def __getitem__(self, idx: int) -> LayerWeights:
        return self.layers[idx]

    def __contains__(self, idx: int) -> bool:
        return idx in self.layers

    def digest(self) -> str:
        """SHA-256 over the canonical little-endian serialization."""
        h = hashlib.sha256()
        for idx in sorted(self.layers):
            lw = self.layers[idx]
            for arr in (lw.weight, lw.bias):
                h.update(struct.pack("<B", len(arr.shape)))
                for d in arr.shape:
                    h.update(struct.pack("<I", d))
                h.update(np.ascontiguousarray(
                    arr.astype("<i4")).tobytes())
            h.update(struct.pack("<i", lw.shift))
        return h.hexdigest()


def _layer_shapes(model):
    for i, lay in enumerate(model.layers):
        if lay.kind == "conv":
            c = lay.cfg
            yield i, (c.n, c.c, c.kh, c.kw), c.n, lay.shift
        elif lay.kind == "fc":
            yield i, (lay.out_features, lay.in_features), lay.out_features, \
                lay.shift


def gen_weights(seed: int, model, b2: int) -> WeightBundle:
    """Deterministic weight/bias bundle for a model, all values B2-wide."""
    rng = SplitMix64(seed)
    layers = {}
    for idx, wshape, nbias, shift in _layer_shapes(model):
        w = rng.fill(wshape, b2)
        b = rng.fill((nbias,), b2)
        layers[idx] = LayerWeights(w, b, shift)
    return WeightBundle(layers)


def gen_input(seed: int, shape, b1: int) -> np.ndarray:
    """Deterministic activation tensor, values B1-wide."""
    return SplitMix64(seed).fill(shape, b1)


def save_weight_bundle(bundle: WeightBundle, model, directory) -> None:
    """Write a bundle as one CBT file per tensor plus a JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {"model": model.manifest(), "layers": {}}
    for idx in sorted(bundle.layers):
        lw = bundle.layers[idx]
        wf, bf = f"layer{idx}.weight.cbt", f"layer{idx}.bias.cbt"
        write_cbt(lw.weight.astype(np.int32), directory / wf)
        write_cbt(lw.bias.astype(np.int32), directory / bf)
        manifest["layers"][str(idx)] = {
            "weight": wf, "bias": bf, "shift": lw.shift}
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True))


def load_weight_bundle(directory) -> WeightBundle:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    layers = {}
    for key, entry in manifest["layers"].items():
        layers[int(key)] = LayerWeights(
            read_cbt(directory / entry["weight"]),
            read_cbt(directory / entry["bias"]),
            int(entry["shift"]),
        )
    return WeightBundle(layers)
