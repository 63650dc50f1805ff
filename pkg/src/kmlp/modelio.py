"""KMLP1 model files.

Layout: the line ``KMLP1\\n``, an 8-byte big-endian header length, a JSON
header (sorted keys) describing every layer, then for each layer its
centers, alpha and bias as little-endian float64 in C order.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, KMLPError
from .kernel import KernelSpec, lipschitz_estimate
from .network import KernelLayer, KernelNetwork

MAGIC = b"KMLP1\n"
_F8 = np.dtype("<f8")


def dumps(net: KernelNetwork) -> bytes:
    layers = []
    for layer in net.layers:
        k = layer.kernel
        layers.append({"kernel": k.kind, "sigma": k.sigma, "a": k.a, "c": k.c,
                       "d_in": layer.d_in, "d_out": layer.d_out,
                       "n_centers": layer.n_centers, "objective": layer.objective})
    header = json.dumps({"format": "KMLP1", "frozen_upto": net.frozen_upto,
                         "layers": layers}, sort_keys=True).encode()
    parts = [MAGIC, struct.pack(">Q", len(header)), header]
    for layer in net.layers:
        for arr in (layer.centers, layer.alpha, layer.bias):
            parts.append(np.ascontiguousarray(arr, dtype=_F8).tobytes())
    return b"".join(parts)


def loads(raw: bytes) -> KernelNetwork:
    if not raw.startswith(MAGIC):
        raise FormatError("not a KMLP1 model file", offset=0)
    pos = len(MAGIC)
    if len(raw) < pos + 8:
        raise FormatError("truncated model header", offset=len(raw))
    (size,) = struct.unpack(">Q", raw[pos:pos + 8])
    pos += 8
    try:
        header = json.loads(raw[pos:pos + size])
        pos += size
        layers = []
        for meta in header["layers"]:
            M, d_in, d_out = meta["n_centers"], meta["d_in"], meta["d_out"]
            arrays = []
            for shape in ((M, d_in), (M, d_out), (d_out,)):
                n = int(np.prod(shape)) * _F8.itemsize
                if len(raw) < pos + n:
                    raise FormatError("truncated parameter block", offset=len(raw))
                arrays.append(np.frombuffer(raw, _F8, int(np.prod(shape)), pos)
                              .reshape(shape).astype(float))
                pos += n
            spec = KernelSpec(sigma=meta["sigma"], kind=meta["kernel"], a=meta["a"], c=meta["c"])
            spec = KernelSpec(sigma=spec.sigma, kind=spec.kind, a=spec.a, c=spec.c,
                              lipschitz=lipschitz_estimate(spec))
            layers.append(KernelLayer(*arrays, spec, meta.get("objective", "")))
        if pos != len(raw):
            raise FormatError(f"{len(raw) - pos} trailing bytes", offset=pos)
        return KernelNetwork(layers, header["frozen_upto"])
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError, KMLPError) as exc:
        raise FormatError(f"corrupt model header: {exc}", offset=len(MAGIC) + 8) from None


def save_network(net: KernelNetwork, path):
    Path(path).write_bytes(dumps(net))


def load_network(path) -> KernelNetwork:
    return loads(Path(path).read_bytes())
