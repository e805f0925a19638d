"""Image ingestion and synthetic test patterns.

Supported containers: binary PGM/PPM (maxval 255 or 65535) and PNG
(8-bit gray/RGB, 16-bit gray).  Pixel values normalize to [0, 1]; the
simulator works on (H, W, 3) float arrays, so grayscale inputs are
replicated across channels.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

_PNM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def _read_pnm_tokens(data: bytes, count: int, start: int):
    """Read `count` whitespace/comment-delimited header tokens."""
    tokens = []
    pos = start
    for _ in range(count):
        m = _PNM_TOKEN.match(data, pos)
        if not m:
            raise ValueError("truncated PNM header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def load_pnm(path) -> np.ndarray:
    """Binary PGM (P5) or PPM (P6) to float64 in [0, 1]; (H,W) or (H,W,3)."""
    data = Path(path).read_bytes()
    if data[:2] not in (b"P5", b"P6"):
        raise ValueError(f"{path}: not a binary PGM/PPM file")
    channels = 1 if data[:2] == b"P5" else 3
    (w, h, maxval), pos = _read_pnm_tokens(data, 3, 2)
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval not in (255, 65535):
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace byte before the raster
    dtype = np.dtype(">u2") if maxval == 65535 else np.uint8
    n = w * h * channels
    raster = np.frombuffer(data, dtype=dtype, count=n, offset=pos)
    if raster.size != n:
        raise ValueError(f"{path}: truncated raster")
    arr = raster.reshape((h, w) if channels == 1 else (h, w, channels))
    return arr.astype(np.float64) / maxval


def save_pnm(path, arr: np.ndarray, maxval: int = 255) -> None:
    """Write float data in [0, 1] as binary PGM/PPM."""
    if maxval not in (255, 65535):
        raise ValueError(f"unsupported maxval {maxval}")
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 2:
        magic, shape_channels = b"P5", 1
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic, shape_channels = b"P6", 3
    else:
        raise ValueError(f"cannot write array of shape {arr.shape} as PNM")
    q = np.rint(np.clip(arr, 0.0, 1.0) * maxval)
    q = q.astype(np.dtype(">u2") if maxval == 65535 else np.uint8)
    header = b"%s\n%d %d\n%d\n" % (magic, arr.shape[1], arr.shape[0], maxval)
    Path(path).write_bytes(header + q.tobytes())


def load_image(path) -> np.ndarray:
    """Load any supported image as an (H, W, 3) array in [0, 1]."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".ppm", ".pnm"):
        arr = load_pnm(path)
    elif suffix == ".png":
        with Image.open(path) as im:
            if im.mode in ("I;16", "I"):
                arr = np.asarray(im, dtype=np.float64) / 65535.0
            elif im.mode in ("L", "RGB"):
                arr = np.asarray(im, dtype=np.float64) / 255.0
            else:
                arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    else:
        raise ValueError(f"{path}: unsupported image format {suffix!r}")
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return np.clip(arr, 0.0, 1.0)


def save_image(path, arr: np.ndarray, maxval: int = 255) -> None:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".ppm", ".pnm"):
        save_pnm(path, arr, maxval)
    elif suffix == ".png":
        q = np.rint(np.clip(np.asarray(arr, dtype=np.float64), 0.0, 1.0) * 255).astype(np.uint8)
        Image.fromarray(q).save(path)
    else:
        raise ValueError(f"{path}: unsupported image format {suffix!r}")


GEN_PATTERNS = ("GRADIENT", "CHECKER", "NOISE")


def generate_pattern(pattern: str, width: int, height: int, seed: int = 0) -> np.ndarray:
    """Deterministic synthetic test image (2-D grayscale in [0, 1])."""
    if width < 1 or height < 1:
        raise ValueError(f"image dims must be >= 1, got {width}x{height}")
    pattern = pattern.upper()
    if pattern == "GRADIENT":
        row = np.linspace(0.0, 1.0, width) if width > 1 else np.zeros(1)
        return np.tile(row, (height, 1))
    if pattern == "CHECKER":
        y, x = np.mgrid[0:height, 0:width]
        return ((x + y) % 2).astype(np.float64)
    if pattern == "NOISE":
        rng = np.random.default_rng(seed)
        return rng.random((height, width))
    raise ValueError(f"pattern: {pattern!r} not one of {GEN_PATTERNS}")
