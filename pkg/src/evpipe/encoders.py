"""Event-window to 8-bit frame encoders.

Two encodings are provided:

* ``frequency`` -- per-pixel signed count (ON minus OFF) over the window,
  range-normalised over the whole frame onto [0, 255].
* ``sae`` -- Surface of Active Events: each pixel holds the timestamp of its
  most recent event, mapped linearly from the window bounds onto [0, 255].

All arithmetic on counts and timestamps is integer, so results are
bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .events import EventStream, ParameterError, SensorGeometry, TimeWindow, slice_window
from .frames import scaled_ratio, write_frames

US_PER_SECOND = 1_000_000
ENCODERS = ("frequency", "sae")


@dataclass(frozen=True)
class EncodingParams:
    kind: str = "frequency"
    fps: int = 25
    geometry: SensorGeometry = field(default_factory=SensorGeometry)
    # SAE only: restrict to ON (+1) or OFF (-1) events; None uses both.
    polarity: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ENCODERS:
            raise ParameterError(f"unknown encoder {self.kind!r}, expected one of {ENCODERS}")
        if isinstance(self.fps, bool) or not isinstance(self.fps, (int, np.integer)) or self.fps < 1:
            raise ParameterError(f"fps must be an integer >= 1, got {self.fps!r}")
        if self.polarity not in (None, 1, -1):
            raise ParameterError(f"polarity must be None, 1 or -1, got {self.polarity!r}")


def _normalize_range(s: np.ndarray) -> np.ndarray:
    """Min-max map each row of ``s`` (n_frames, n_pixels) onto [0, 255]."""
    lo = s.min(axis=1, keepdims=True)
    hi = s.max(axis=1, keepdims=True)
    span = hi - lo
    out = scaled_ratio(s - lo, np.maximum(span, 1))
    out[(span == 0).ravel()] = 0
    return out.astype(np.uint8)


def _frequency_frames(frame_idx, pix, p, n_frames, n_pixels) -> np.ndarray:
    key = frame_idx * n_pixels + pix
    s = np.zeros(n_frames * n_pixels, dtype=np.int64)
    np.add.at(s, key, p.astype(np.int64))
    return _normalize_range(s.reshape(n_frames, n_pixels))


def _sae_frames(frame_idx, pix, t, starts, ends, n_pixels) -> np.ndarray:
    n_frames = len(starts)
    key = frame_idx * n_pixels + pix
    has = np.zeros(n_frames * n_pixels, dtype=bool)
    has[key] = True
    last = np.full(n_frames * n_pixels, np.iinfo(np.int64).min, dtype=np.int64)
    np.maximum.at(last, key, t)
    last = last.reshape(n_frames, n_pixels)
    has = has.reshape(n_frames, n_pixels)

    start = starts[:, None]
    length = (ends - starts)[:, None]
    offset = np.clip(np.where(has, last - start, 0), 0, None)
    out = scaled_ratio(np.minimum(offset, np.maximum(length, 1)), np.maximum(length, 1))
    out = np.where(length == 0, 255, out)
    out[~has] = 0
    return out.astype(np.uint8)


def frequency_encode(window_events: EventStream, window: TimeWindow = None) -> np.ndarray:
    """Frequency-encode one window; returns a ``(height, width)`` uint8 frame.

    ``window`` is accepted for signature symmetry with :func:`sae_encode`; the
    result depends only on the events passed in.
    """
    g = window_events.geometry
    ev = window_events
    pix = ev.y.astype(np.int64) * g.width + ev.x
    frame = _frequency_frames(np.zeros(len(ev), np.int64), pix, ev.p, 1, g.n_pixels)
    return frame.reshape(g.shape)


def sae_encode(window_events: EventStream, window: TimeWindow, polarity: Optional[int] = None) -> np.ndarray:
    """Surface-of-active-events frame for one window, ``(height, width)`` uint8.

    Pixels without events are 0. A pixel whose last event is at ``t`` maps to
    ``round(255 * (t - t_start) / (t_end - t_start))``; for a zero-length
    window every event-bearing pixel is 255.
    """
    g = window_events.geometry
    ev = window_events
    if polarity is not None:
        ev = ev.take(ev.p == polarity)
    pix = ev.y.astype(np.int64) * g.width + ev.x
    frame = _sae_frames(np.zeros(len(ev), np.int64), pix, ev.t,
                        np.array([window.t_start], np.int64), np.array([window.t_end], np.int64),
                        g.n_pixels)
    return frame.reshape(g.shape)


def frame_bounds(span: TimeWindow, fps: int) -> np.ndarray:
    """Boundaries ``b_0 < ... < b_n`` of the per-frame sub-windows of ``span``.

    ``b_k = t_start + floor(k * 1e6 / fps)``; ``n = floor(length * fps / 1e6)``,
    so a trailing partial sub-window is dropped.
    """
    if fps < 1:
        raise ParameterError(f"fps must be >= 1, got {fps}")
    n = span.length * fps // US_PER_SECOND
    k = np.arange(n + 1, dtype=np.int64)
    return span.t_start + (k * US_PER_SECOND) // fps


def encode_sequence(stream: EventStream, params: EncodingParams, span: TimeWindow = None) -> np.ndarray:
    """Encode ``span`` as consecutive frames at ``params.fps``.

    Returns an array of shape ``(n_frames, height, width)``. ``span`` defaults
    to the stream's own time range.
    """
    if span is None:
        span = stream.time_range()
    g = stream.geometry
    bounds = frame_bounds(span, params.fps)
    n_frames = len(bounds) - 1
    if n_frames <= 0:
        return np.zeros((0,) + g.shape, dtype=np.uint8)
    ev = slice_window(stream, TimeWindow(int(bounds[0]), int(bounds[-1])))
    if params.kind == "sae" and params.polarity is not None:
        ev = ev.take(ev.p == params.polarity)
    frame_idx = np.searchsorted(bounds, ev.t, side="right") - 1
    pix = ev.y.astype(np.int64) * g.width + ev.x
    if params.kind == "frequency":
        frames = _frequency_frames(frame_idx, pix, ev.p, n_frames, g.n_pixels)
    else:
        frames = _sae_frames(frame_idx, pix, ev.t, bounds[:-1], bounds[1:], g.n_pixels)
    return frames.reshape((n_frames,) + g.shape)


def write_sequence_archive(directory, frames, params: EncodingParams, span: TimeWindow) -> Path:
    """Write ``frame_%05d.pgm`` files plus ``meta.json`` into ``directory``."""
    directory = Path(directory)
    write_frames(directory, frames)
    meta = {
        "geometry": {"width": params.geometry.width, "height": params.geometry.height},
        "fps": int(params.fps),
        "encoder": params.kind,
        "polarity": params.polarity,
        "window": {"t_start": span.t_start, "t_end": span.t_end},
        "n_frames": int(len(frames)),
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return directory
