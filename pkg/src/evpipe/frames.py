"""Frame helpers: half-away-from-zero rounding and binary PGM (P5) I/O."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

FRAME_NAME = "frame_{:05d}.pgm"


def round_half_away(x):
    """Round to nearest integer, ties away from zero (float input)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def scaled_ratio(num, den, scale: int = 255):
    """``round_half_away(scale * num / den)`` in exact integer arithmetic.

    ``num`` must be >= 0 and ``den`` > 0 (broadcastable integer arrays).
    """
    num = np.asarray(num, dtype=np.int64)
    den = np.asarray(den, dtype=np.int64)
    return (2 * scale * num + den) // (2 * den)


def to_uint8(values) -> np.ndarray:
    return np.clip(values, 0, 255).astype(np.uint8)


def encode_pgm(frame: np.ndarray) -> bytes:
    frame = np.asarray(frame)
    if frame.ndim != 2 or frame.dtype != np.uint8:
        raise ValueError(f"expected a 2-D uint8 frame, got {frame.dtype} {frame.shape}")
    h, w = frame.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(frame).tobytes()


_PGM_HEADER = re.compile(rb"P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")


def decode_pgm(data: bytes) -> np.ndarray:
    m = _PGM_HEADER.match(data)
    if not m:
        raise ValueError("not a binary PGM (P5) image")
    w, h, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise ValueError(f"only maxval 255 supported, got {maxval}")
    body = data[m.end():m.end() + w * h]
    if len(body) != w * h:
        raise ValueError("truncated PGM pixel data")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def write_pgm(path, frame: np.ndarray) -> None:
    Path(path).write_bytes(encode_pgm(frame))


def read_pgm(path) -> np.ndarray:
    return decode_pgm(Path(path).read_bytes())


def write_frames(directory, frames) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        write_pgm(directory / FRAME_NAME.format(i), frame)


def read_frames(directory) -> np.ndarray:
    paths = sorted(Path(directory).glob("frame_*.pgm"))
    if not paths:
        raise FileNotFoundError(f"no frame_*.pgm files in {directory}")
    return np.stack([read_pgm(p) for p in paths])
