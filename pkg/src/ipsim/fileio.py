"""On-disk interchange formats.

Weight bank (IPWB), little-endian:
    magic "IPWB", u16 version, u32 M, u32 columns, u8 flags (bit0:
    has_rgb_source), f32 weights row-major, f32 biases, then the optional
    f32 RGB source matrix (M x columns*3).  Weights are stored raw
    (pre-normalization); loading renormalizes and records the scale.

Feature frame (IPFF), little-endian:
    magic "IPFF", u16 version, u32 frame index, u32 patch count, u32 M,
    then per patch: u32 patch index + M x f32 features.

CSV alternative for features: header "frame,patch,vector,value".

Selection mask: text, one "0"/"1" line per patch in row-major patch order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .geometry import PatchTiling, SelectionMask
from .patches import WeightBank
from .readout import DigitalFeatureFrame

WEIGHT_MAGIC = b"IPWB"
FEATURE_MAGIC = b"IPFF"
FORMAT_VERSION = 1

_FLAG_RGB_SOURCE = 0x01


def save_weight_bank(path, bank: WeightBank) -> None:
    flags = _FLAG_RGB_SOURCE if bank.source_rgb is not None else 0
    parts = [
        WEIGHT_MAGIC,
        struct.pack("<HIIB", FORMAT_VERSION, bank.m, bank.columns, flags),
        bank.raw_weights.astype("<f4").tobytes(),
        bank.bias.astype("<f4").tobytes(),
    ]
    if bank.source_rgb is not None:
        parts.append(np.asarray(bank.source_rgb).astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_weight_bank(path) -> WeightBank:
    data = Path(path).read_bytes()
    if data[:4] != WEIGHT_MAGIC:
        raise ValueError(f"{path}: not a weight bank file (bad magic)")
    version, m, columns, flags = struct.unpack_from("<HIIB", data, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported weight bank version {version}")
    offset = 4 + struct.calcsize("<HIIB")
    n_w = m * columns
    weights = np.frombuffer(data, dtype="<f4", count=n_w, offset=offset).astype(np.float64)
    offset += 4 * n_w
    bias = np.frombuffer(data, dtype="<f4", count=m, offset=offset).astype(np.float64)
    offset += 4 * m
    source = None
    if flags & _FLAG_RGB_SOURCE:
        n_s = m * columns * 3
        source = np.frombuffer(data, dtype="<f4", count=n_s, offset=offset).astype(np.float64)
        source = source.reshape(m, columns * 3)
    if weights.size != n_w or bias.size != m:
        raise ValueError(f"{path}: truncated weight bank")
    return WeightBank.from_raw(weights.reshape(m, columns), bias, source_rgb=source)


def save_features(path, frame: DigitalFeatureFrame) -> None:
    parts = [
        FEATURE_MAGIC,
        struct.pack("<HIII", FORMAT_VERSION, frame.frame_index, frame.n_selected, frame.m),
    ]
    feats = np.asarray(frame.features, dtype="<f4")
    for row, patch_index in enumerate(frame.patch_indices):
        parts.append(struct.pack("<I", int(patch_index)))
        parts.append(feats[row].tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_features(path) -> DigitalFeatureFrame:
    data = Path(path).read_bytes()
    if data[:4] != FEATURE_MAGIC:
        raise ValueError(f"{path}: not a feature file (bad magic)")
    version, frame_index, n_patches, m = struct.unpack_from("<HIII", data, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported feature file version {version}")
    offset = 4 + struct.calcsize("<HIII")
    indices = np.empty(n_patches, dtype=np.intp)
    features = np.empty((n_patches, m))
    record = 4 + 4 * m
    for row in range(n_patches):
        if offset + record > len(data):
            raise ValueError(f"{path}: truncated feature file")
        (indices[row],) = struct.unpack_from("<I", data, offset)
        features[row] = np.frombuffer(data, dtype="<f4", count=m, offset=offset + 4)
        offset += record
    return DigitalFeatureFrame(indices, features, m, frame_index=frame_index)


def save_features_csv(path, frame: DigitalFeatureFrame) -> None:
    lines = ["frame,patch,vector,value"]
    for row, patch_index in enumerate(frame.patch_indices):
        for v in range(frame.m):
            lines.append(f"{frame.frame_index},{int(patch_index)},{v},{float(frame.features[row, v])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_features_csv(path) -> DigitalFeatureFrame:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0].strip() != "frame,patch,vector,value":
        raise ValueError(f"{path}: missing feature CSV header")
    rows = {}
    frame_index = 0
    for ln in lines[1:]:
        f, p, v, val = ln.split(",")
        frame_index = int(f)
        rows.setdefault(int(p), {})[int(v)] = float(val)
    if not rows:
        return DigitalFeatureFrame(np.empty(0, dtype=np.intp), np.empty((0, 0)), 0, frame_index)
    m = max(max(d) for d in rows.values()) + 1
    indices = np.asarray(sorted(rows), dtype=np.intp)
    features = np.array([[rows[p][v] for v in range(m)] for p in indices])
    return DigitalFeatureFrame(indices, features, m, frame_index=frame_index)


def save_mask(path, mask: SelectionMask) -> None:
    Path(path).write_text("".join(f"{int(bit)}\n" for bit in mask.selected))


def load_mask(path, tiling: PatchTiling) -> SelectionMask:
    bits = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line not in ("0", "1"):
            raise ValueError(f"{path}: mask lines must be 0 or 1, got {line!r}")
        bits.append(line == "1")
    return SelectionMask(np.asarray(bits, dtype=bool), tiling)
