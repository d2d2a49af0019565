"""Synthetic event recordings for fixtures and smoke runs.

Two motion patterns are generated: a static flickering patch (both
polarities, no motion) and a vertical bar sweeping left to right (ON at the
leading edge, OFF at the trailing edge). Pattern parameters are derived from
the class id so every class in the taxonomy gets a distinct recording style.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, Sequence

import numpy as np

from .events import EventStream, SensorGeometry
from .ingest import ManifestEntry, dump_manifest, label_from_name, write_binary_events


def _finish(geometry, t, x, y, p) -> EventStream:
    order = np.argsort(t, kind="stable")
    return EventStream(geometry, t[order], x[order], y[order], p[order])


def flicker_recording(geometry: SensorGeometry, duration_us: int, rng: np.random.Generator,
                      center=(0.5, 0.5), size=0.25, rate_hz: float = 100.0, period_us: int = 600_000,
                      drop_us: int = 10_000, noise_hz: float = 0.05) -> EventStream:
    """Static patch lit by a sawtooth-flickering lamp.

    Brightness ramps up slowly (ON events spread over the ramp) and drops
    abruptly (an equal number of OFF events in the final ``drop_us`` of each
    period). Sparse random-polarity noise covers the whole sensor.
    """
    w, h = geometry.width, geometry.height
    side_x, side_y = max(1, int(w * size)), max(1, int(h * size))
    cx = int(center[0] * w + rng.integers(-1, 2))
    cy = int(center[1] * h + rng.integers(-1, 2))
    x0, y0 = np.clip(cx - side_x // 2, 0, w - side_x), np.clip(cy - side_y // 2, 0, h - side_y)
    px, py = np.meshgrid(np.arange(x0, x0 + side_x), np.arange(y0, y0 + side_y))
    px, py = px.ravel(), py.ravel()
    ramp_us = period_us - drop_us
    phase = int(rng.integers(0, period_us))
    n_cycles = duration_us // period_us + 2
    n_per = rng.poisson(rate_hz * ramp_us / 1e6, size=(n_cycles, px.size))
    cycle = np.repeat(np.arange(n_cycles), n_per.sum(axis=1))
    pix = np.concatenate([np.repeat(np.arange(px.size), row) for row in n_per])
    base = (cycle - 1) * period_us + phase
    t_on = base + rng.integers(0, ramp_us, pix.size)
    t_off = base + ramp_us + rng.integers(0, drop_us, pix.size)
    t = np.concatenate([t_on, t_off])
    x = np.concatenate([px[pix], px[pix]])
    y = np.concatenate([py[pix], py[pix]])
    p = np.concatenate([np.ones(pix.size, np.int64), -np.ones(pix.size, np.int64)])
    n_bg = rng.poisson(noise_hz * duration_us / 1e6 * w * h)
    t = np.concatenate([t, rng.integers(0, duration_us, n_bg)])
    x = np.concatenate([x, rng.integers(0, w, n_bg)])
    y = np.concatenate([y, rng.integers(0, h, n_bg)])
    p = np.concatenate([p, rng.choice(np.array([-1, 1]), n_bg)])
    keep = (t >= 0) & (t < duration_us)
    return _finish(geometry, t[keep], x[keep], y[keep], p[keep])


def sweeping_bar_recording(geometry: SensorGeometry, duration_us: int, rng: np.random.Generator,
                           period_us: int = 1_000_000, bar_width: int = 4, step_us: int = 2_000,
                           fire_prob: float = 0.5, noise_hz: float = 0.05) -> EventStream:
    """Vertical bar crossing the sensor once per ``period_us``."""
    w, h = geometry.width, geometry.height
    steps = np.arange(0, duration_us, step_us)
    phase = rng.integers(0, period_us)
    lead = (((steps + phase) % period_us) * (w + bar_width) // period_us).astype(np.int64)
    trail = lead - bar_width
    ts, xs, ys, ps = [], [], [], []
    for col, pol in ((lead, 1), (trail, -1)):
        t = np.repeat(steps, h)
        x = np.repeat(col, h)
        y = np.tile(np.arange(h), len(steps))
        keep = (x >= 0) & (x < w) & (rng.random(x.size) < fire_prob)
        ts.append(t[keep] + rng.integers(0, step_us, keep.sum()))
        xs.append(x[keep])
        ys.append(y[keep])
        ps.append(np.full(keep.sum(), pol))
    n_bg = rng.poisson(noise_hz * duration_us / 1e6 * w * h)
    ts.append(rng.integers(0, duration_us, n_bg))
    xs.append(rng.integers(0, w, n_bg))
    ys.append(rng.integers(0, h, n_bg))
    ps.append(rng.choice(np.array([-1, 1]), n_bg))
    t = np.minimum(np.concatenate(ts), duration_us - 1)
    return _finish(geometry, t, np.concatenate(xs), np.concatenate(ys), np.concatenate(ps))


def class_recording(class_id: int, geometry: SensorGeometry, duration_us: int,
                    rng: np.random.Generator) -> EventStream:
    """Even ids flicker at an id-dependent spot; odd ids sweep at an id-dependent speed."""
    if class_id % 2 == 0:
        k = class_id // 2
        center = (0.25 + 0.5 * (k % 2), 0.25 + 0.5 * ((k // 2) % 2))
        return flicker_recording(geometry, duration_us, rng, center=center, size=0.25 + 0.05 * (k // 4))
    return sweeping_bar_recording(geometry, duration_us, rng, period_us=500_000 + 250_000 * (class_id // 2))


def write_corpus(out_dir, classes: Sequence[str], counts: Dict[str, int], *,
                 geometry: SensorGeometry = SensorGeometry(64, 48), duration_us: int = 3_500_000,
                 seed: int = 0, patterns: Dict[str, str] = None) -> Path:
    """Write binary recordings plus ``manifest.json`` under ``out_dir``.

    ``counts`` maps split -> recordings per class. ``patterns`` optionally maps
    a class name to ``"flicker"`` or ``"bar"``; other classes use
    :func:`class_recording`. Returns the manifest path.
    """
    out_dir = Path(out_dir)
    rec_dir = out_dir / "recordings"
    rec_dir.mkdir(parents=True, exist_ok=True)
    patterns = patterns or {}
    entries = []
    for name in classes:
        label = label_from_name(name)
        for split, n in counts.items():
            for i in range(n):
                rng = np.random.default_rng([seed, label.id, ["train", "validation", "test"].index(split), i])
                kind = patterns.get(name)
                if kind == "flicker":
                    stream = flicker_recording(geometry, duration_us, rng)
                elif kind == "bar":
                    stream = sweeping_bar_recording(geometry, duration_us, rng)
                else:
                    stream = class_recording(label.id, geometry, duration_us, rng)
                rel = f"recordings/{name}_{split}_{i:03d}.evt"
                (out_dir / rel).write_bytes(write_binary_events(stream))
                entries.append(ManifestEntry(rel, label, split, duration_us))
    manifest = out_dir / "manifest.json"
    manifest.write_text(dump_manifest(entries))
    return manifest


def write_run_config(path, manifest, output_dir, *, geometry: SensorGeometry, seed: int = 0,
                     encoder: str = "frequency", fps: int = 25, augment=()) -> Path:
    cfg = {
        "manifest": str(manifest),
        "geometry": {"width": geometry.width, "height": geometry.height},
        "encoder": {"kind": encoder, "fps": fps},
        "sampler": {"window_seconds": 3, "clip_len": 16, "seed": seed},
        "augment": list(augment),
        "output_dir": str(output_dir),
    }
    path = Path(path)
    path.write_text(json.dumps(cfg, indent=2) + "\n")
    return path


