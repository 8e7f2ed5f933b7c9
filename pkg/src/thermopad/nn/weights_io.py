"""Flat binary weight container.

Layout: 8-byte magic ``THPADW01``, then one record per parameter tensor in
layer order (weight before bias within a layer):

    layer index : u32 little-endian
    tensor rank : u32
    dims        : rank * u32
    values      : product(dims) * f64 little-endian

The stream ends at EOF; there is no record count.  Loading validates every
record against the target network's layer indices and shapes, so a file can
only be loaded into a structurally identical model (replace the bottleneck
afterwards to repurpose a trained body).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import WeightFormatError
from .network import Network

MAGIC = b"THPADW01"

# weight first, bias second: fixed serialization order within a layer
_PARAM_ORDER = ("weight", "bias")


def _layer_records(net: Network):
    for index, params in enumerate(net.params):
        for name in _PARAM_ORDER:
            if name in params:
                yield index, name, params[name]


def save_weights(net: Network, path: str | Path) -> None:
    """Write every parameter tensor of `net` to `path`."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        for index, _, arr in _layer_records(net):
            dims = arr.shape
            fh.write(struct.pack("<II", index, len(dims)))
            fh.write(struct.pack(f"<{len(dims)}I", *dims))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_weights(net: Network, path: str | Path) -> Network:
    """Load parameters from `path` into `net` (in place).

    Raises WeightFormatError on a bad magic, a truncated record, or any
    layer-index/shape mismatch against `net`.
    """
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise WeightFormatError(f"{path}: bad magic {blob[:8]!r}, expected {MAGIC!r}")
    offset = 8
    expected = list(_layer_records(net))
    loaded = 0
    while offset < len(blob):
        if offset + 8 > len(blob):
            raise WeightFormatError(f"{path}: truncated record header at byte {offset}")
        index, rank = struct.unpack_from("<II", blob, offset)
        offset += 8
        if offset + 4 * rank > len(blob):
            raise WeightFormatError(f"{path}: truncated dims at byte {offset}")
        dims = struct.unpack_from(f"<{rank}I", blob, offset)
        offset += 4 * rank
        count = int(np.prod(dims)) if rank else 1
        nbytes = 8 * count
        if offset + nbytes > len(blob):
            raise WeightFormatError(f"{path}: truncated values at byte {offset}")
        values = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(dims)
        offset += nbytes

        if loaded >= len(expected):
            raise WeightFormatError(f"{path}: more records than network parameters")
        exp_index, name, target = expected[loaded]
        if index != exp_index:
            raise WeightFormatError(
                f"{path}: record {loaded} is for layer {index}, expected layer {exp_index}"
            )
        if tuple(dims) != target.shape:
            raise WeightFormatError(
                f"{path}: layer {index} {name} has shape {tuple(dims)}, "
                f"network expects {target.shape}"
            )
        target[...] = values
        loaded += 1
    if loaded != len(expected):
        raise WeightFormatError(
            f"{path}: {loaded} records for a network with {len(expected)} parameter tensors"
        )
    return net
