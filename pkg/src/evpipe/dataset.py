"""Labeled clip datasets: sliding windows, random 16-of-75 frame sampling,
augmentation expansion and on-disk clip archives.

Archive layout written by :func:`build_splits`::

    <out>/summary.json                  {split: {class: count}}
    <out>/<split>/<clip_id>/frame_00000.pgm ... frame_00015.pgm
    <out>/<split>/<clip_id>/clip.json
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .augment import AugmentSpec, augment_clip
from .encoders import US_PER_SECOND, EncodingParams, encode_sequence
from .events import EventStream, ParameterError, TimeWindow
from .frames import read_frames, write_frames
from .ingest import CLASSES, SPLITS, ClassLabel, ManifestEntry, label_from_id, read_events

log = logging.getLogger(__name__)

THREADS_ENV = "EVPIPE_THREADS"


class DatasetError(RuntimeError):
    pass


def worker_count() -> int:
    """Worker cap from ``EVPIPE_THREADS``, else the CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SamplerConfig:
    fps: int = 25
    window_seconds: float = 3
    clip_len: int = 16
    seed: int = 0
    # None means stride == window length (non-overlapping windows).
    stride_seconds: Optional[float] = None

    def __post_init__(self):
        if self.fps < 1 or self.clip_len < 1 or self.window_seconds <= 0:
            raise ParameterError("fps, clip_len and window_seconds must be positive")
        if self.stride_seconds is not None and self.stride_seconds <= 0:
            raise ParameterError("stride_seconds must be positive")
        if self.clip_len > self.frames_per_window:
            raise ParameterError(
                f"clip_len {self.clip_len} exceeds the {self.frames_per_window} frames per window")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")

    @property
    def window_us(self) -> int:
        return int(round(self.window_seconds * US_PER_SECOND))

    @property
    def stride_us(self) -> int:
        if self.stride_seconds is None:
            return self.window_us
        return int(round(self.stride_seconds * US_PER_SECOND))

    @property
    def frames_per_window(self) -> int:
        return self.window_us * self.fps // US_PER_SECOND


@dataclass
class ClipSample:
    frames: np.ndarray  # (clip_len, H, W) uint8
    label: ClassLabel
    source: str
    window: TimeWindow
    split: str
    indices: List[int] = field(default_factory=list)
    augment: Optional[AugmentSpec] = None
    window_index: int = 0


def sample_clip(n_frames, clip_len: int, rng: np.random.Generator) -> np.ndarray:
    """``clip_len`` sorted indices drawn uniformly among all subsets of ``range(n)``."""
    n = n_frames if isinstance(n_frames, (int, np.integer)) else len(n_frames)
    if n < clip_len:
        raise ParameterError(f"cannot sample {clip_len} frames from {n}")
    return np.sort(rng.choice(n, size=clip_len, replace=False))


def slide_windows(recording: EventStream, config: SamplerConfig, duration_us: int = None) -> List[TimeWindow]:
    """Consecutive windows from t=0 covering the recording; partial tail dropped.

    ``duration_us`` defaults to one past the last event timestamp.
    """
    if duration_us is None:
        duration_us = recording.time_range().t_end
    win, stride = config.window_us, config.stride_us
    out = []
    start = 0
    while start + win <= duration_us:
        out.append(TimeWindow(start, start + win))
        start += stride
    return out


def clip_rng(seed: int, path: str, window_index: int) -> np.random.Generator:
    """Per-(recording, window) generator, independent of processing order."""
    digest = hashlib.sha256(path.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(seed), *words, int(window_index)]))


_UNSAFE = re.compile(r"[^A-Za-z0-9._-]+")


def clip_id(clip: ClipSample) -> str:
    tag = hashlib.sha256(clip.source.encode("utf-8")).hexdigest()[:8]
    stem = _UNSAFE.sub("_", clip.source).strip("_.")[-48:] or "rec"
    name = f"{clip.label.name}__{stem}-{tag}__w{clip.window_index:03d}"
    if clip.augment is not None:
        name += "__" + clip.augment.name
    return name


def clip_meta(clip: ClipSample, params: EncodingParams) -> dict:
    g = params.geometry
    return {
        "label": {"id": clip.label.id, "name": clip.label.name},
        "source": {"path": clip.source, "window_index": clip.window_index,
                   "window": {"t_start": clip.window.t_start, "t_end": clip.window.t_end}},
        "split": clip.split,
        "indices": [int(i) for i in clip.indices],
        "encoder": {"kind": params.kind, "fps": int(params.fps), "polarity": params.polarity},
        "geometry": {"width": g.width, "height": g.height},
        "augment": clip.augment.to_json() if clip.augment is not None else None,
    }


def write_clip(directory, clip: ClipSample, params: EncodingParams) -> Path:
    directory = Path(directory)
    write_frames(directory, clip.frames)
    meta = json.dumps(clip_meta(clip, params), indent=2, sort_keys=True) + "\n"
    (directory / "clip.json").write_text(meta)
    return directory


def load_clip(directory) -> ClipSample:
    directory = Path(directory)
    meta = json.loads((directory / "clip.json").read_text())
    src = meta["source"]
    aug = meta.get("augment")
    return ClipSample(
        frames=read_frames(directory),
        label=label_from_id(meta["label"]["id"]),
        source=src["path"],
        window=TimeWindow(src["window"]["t_start"], src["window"]["t_end"]),
        split=meta["split"],
        indices=list(meta["indices"]),
        augment=AugmentSpec.from_json(aug) if aug else None,
        window_index=src["window_index"],
    )


def iter_split(out_dir, split: str):
    """Yield the clips of one split of a built dataset, in sorted id order."""
    root = Path(out_dir) / split
    if not root.is_dir():
        return
    for d in sorted(p for p in root.iterdir() if (p / "clip.json").is_file()):
        yield load_clip(d)


def recording_clips(entry: ManifestEntry, recording: EventStream, params: EncodingParams,
                    sampler: SamplerConfig, augments: Sequence[AugmentSpec] = ()) -> List[ClipSample]:
    """All clips for one recording: one sampled clip per window, plus one per
    augmentation for train/validation entries."""
    clips = []
    for k, window in enumerate(slide_windows(recording, sampler, entry.duration_us)):
        frames = encode_sequence(recording, params, window)
        rng = clip_rng(sampler.seed, entry.path, k)
        idx = sample_clip(len(frames), sampler.clip_len, rng)
        base = ClipSample(frames[idx], entry.label, entry.path, window, entry.split,
                          idx.tolist(), None, k)
        clips.append(base)
        if entry.split == "test":
            continue
        for spec in augments:
            clips.append(ClipSample(augment_clip(base.frames, spec), entry.label, entry.path,
                                    window, entry.split, base.indices, spec, k))
    return clips


@dataclass
class DatasetSummary:
    counts: Dict[str, Dict[str, int]]
    warnings: List[str] = field(default_factory=list)

    def total(self, split: str) -> int:
        return sum(self.counts.get(split, {}).values())

    def to_json(self) -> dict:
        return self.counts


def build_splits(entries: Sequence[ManifestEntry], params: EncodingParams, sampler: SamplerConfig,
                 augments: Sequence[AugmentSpec] = (), out_dir=None, root=None) -> DatasetSummary:
    """Encode, window, sample and augment every manifest entry.

    Recording paths are resolved against ``root`` (default: cwd). With
    ``out_dir`` set, existing split directories there are replaced by fresh
    clip archives and ``summary.json`` is written.
    """
    if params.fps != sampler.fps:
        raise ParameterError(f"encoder fps {params.fps} != sampler fps {sampler.fps}")
    root = Path(root) if root is not None else Path.cwd()
    if out_dir is not None:
        out_dir = Path(out_dir)
        for split in SPLITS:
            shutil.rmtree(out_dir / split, ignore_errors=True)
        out_dir.mkdir(parents=True, exist_ok=True)

    def work(entry: ManifestEntry):
        path = root / entry.path
        try:
            rec = read_events(path, params.geometry)
        except (OSError, ValueError) as exc:
            raise DatasetError(f"cannot read recording {entry.path}: {exc}") from exc
        clips = recording_clips(entry, rec, params, sampler, augments)
        if out_dir is not None:
            for clip in clips:
                write_clip(out_dir / clip.split / clip_id(clip), clip, params)
        return [(c.split, c.label) for c in clips]

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(work, entries))

    tally = {s: {} for s in SPLITS}
    for rows in results:
        for split, label in rows:
            tally[split][label] = tally[split].get(label, 0) + 1
    counts = {s: {lab.name: tally[s][lab] for lab in CLASSES if lab in tally[s]} for s in SPLITS}
    warnings = [f"split {s!r} is empty" for s in SPLITS if not counts[s]]
    for w in warnings:
        log.warning(w)
    summary = DatasetSummary(counts, warnings)
    if out_dir is not None:
        (out_dir / "summary.json").write_text(json.dumps(counts, indent=2) + "\n")
    return summary
