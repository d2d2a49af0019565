"""Nearest-centroid classifier over 16x16 temporal-mean clip features.

Only meant to drive the pipeline end to end; it has no hyperparameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, Iterable, Tuple

import numpy as np

from .ingest import ClassLabel, label_from_id

FEATURE_SIDE = 16


class NotFittedError(RuntimeError):
    pass


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    """``(n_out, n_in)`` matrix averaging input cells by fractional overlap."""
    edges = np.arange(n_out + 1) * (n_in / n_out)
    lo, hi = edges[:-1, None], edges[1:, None]
    cells = np.arange(n_in)[None, :]
    overlap = np.clip(np.minimum(hi, cells + 1) - np.maximum(lo, cells), 0, None)
    return overlap / overlap.sum(axis=1, keepdims=True)


def area_downsample(image: np.ndarray, side: int = FEATURE_SIDE) -> np.ndarray:
    h, w = image.shape
    return _area_weights(h, side) @ image @ _area_weights(w, side).T


def featurize(clip) -> np.ndarray:
    """Mean frame of the clip, area-pooled to 16x16, flattened and scaled to [0, 1]."""
    frames = clip.frames if hasattr(clip, "frames") else clip
    mean = np.asarray(frames, dtype=np.float64).mean(axis=0)
    return np.clip(area_downsample(mean).ravel() / 255.0, 0.0, 1.0)


@dataclass
class CentroidModel:
    centroids: Dict[int, np.ndarray]

    @property
    def classes(self):
        return sorted(self.centroids)

    def to_json(self) -> str:
        return json.dumps({str(k): self.centroids[k].tolist() for k in self.classes}) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CentroidModel":
        raw = json.loads(text)
        return cls({int(k): np.asarray(v, dtype=np.float64) for k, v in raw.items()})


def fit(samples: Iterable[Tuple[np.ndarray, ClassLabel]]) -> CentroidModel:
    groups: Dict[int, list] = {}
    for feature, label in samples:
        cid = label.id if isinstance(label, ClassLabel) else int(label)
        groups.setdefault(cid, []).append(np.asarray(feature, dtype=np.float64))
    if not groups:
        raise ValueError("cannot fit on an empty sample set")
    return CentroidModel({k: np.mean(v, axis=0) for k, v in sorted(groups.items())})


def predict(model: CentroidModel, feature) -> ClassLabel:
    """Closest centroid by Euclidean distance; ties go to the lowest class id."""
    if model is None or not model.centroids:
        raise NotFittedError("model has no centroids; call fit() first")
    ids = model.classes
    stack = np.stack([model.centroids[k] for k in ids])
    d2 = ((stack - np.asarray(feature, dtype=np.float64)) ** 2).sum(axis=1)
    return label_from_id(ids[int(np.argmin(d2))])
