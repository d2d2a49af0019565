"""Frame-level augmentations: gamma, histogram equalisation, CLAHE, Gaussian
blur, Laplacian edges and 3x3 grayscale morphology.

Every transform maps a ``(H, W)`` uint8 frame to a uint8 frame of the same
shape. Convolutions use a reflect-101 border (``dcb|abcd|cba``), morphology a
replicate border; rounding is half away from zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .events import ParameterError
from .frames import round_half_away, scaled_ratio, to_uint8

AUGMENT_OPS = ("gamma", "hist_eq", "clahe", "gaussian_blur", "edge", "morphology")
MORPH_OPS = ("erode", "dilate", "open", "close")
NO_CLIP = math.inf

LAPLACIAN = np.array([[-1, -1, -1], [-1, 8, -1], [-1, -1, -1]], dtype=np.int64)


def _as_frame(frame) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.ndim != 2:
        raise ParameterError(f"expected a 2-D frame, got shape {frame.shape}")
    return frame.astype(np.uint8, copy=False)


def gamma_contrast(frame, gamma: float) -> np.ndarray:
    """``255 * (v / 255) ** gamma`` per pixel."""
    if not gamma > 0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    frame = _as_frame(frame)
    lut = to_uint8(round_half_away(255.0 * (np.arange(256) / 255.0) ** gamma))
    return lut[frame]


def _equalize_lut(hist) -> np.ndarray:
    """Equalisation mapping for a 256-bin histogram (int or float counts).

    Integer histograms use exact integer arithmetic. A histogram with fewer
    than two occupied bins gets the identity mapping.
    """
    hist = np.asarray(hist)
    if np.count_nonzero(hist) < 2:
        return np.arange(256, dtype=np.uint8)
    cdf = np.cumsum(hist)
    total = cdf[-1]
    cdf_min = cdf[np.flatnonzero(cdf > 0)[0]]
    if np.issubdtype(hist.dtype, np.integer):
        lut = scaled_ratio(np.maximum(cdf - cdf_min, 0), total - cdf_min)
    else:
        lut = round_half_away(255.0 * np.maximum(cdf - cdf_min, 0) / (total - cdf_min))
    return to_uint8(lut)


def hist_equalize(frame) -> np.ndarray:
    frame = _as_frame(frame)
    hist = np.bincount(frame.ravel(), minlength=256).astype(np.int64)
    return _equalize_lut(hist)[frame]


def _tile_edges(n: int, tiles: int) -> np.ndarray:
    step = n // tiles
    edges = np.arange(tiles + 1) * step
    edges[-1] = n  # last tile absorbs the remainder
    return edges


def _tile_lut(block: np.ndarray, clip_limit: float) -> np.ndarray:
    hist = np.bincount(block.ravel(), minlength=256).astype(np.int64)
    if math.isinf(clip_limit) or np.count_nonzero(hist) < 2:
        return _equalize_lut(hist)
    limit = clip_limit * block.size / 256.0
    excess = np.maximum(hist - limit, 0).sum()
    return _equalize_lut(np.minimum(hist, limit) + excess / 256.0)


def _interp_axis(n: int, edges: np.ndarray):
    """For each coordinate: lower tile index, upper tile index, upper weight."""
    centers = (edges[:-1] + edges[1:] - 1) / 2.0
    pos = np.arange(n, dtype=np.float64)
    hi = np.searchsorted(centers, pos, side="right")
    lo = np.clip(hi - 1, 0, len(centers) - 1)
    hi = np.clip(hi, 0, len(centers) - 1)
    gap = centers[hi] - centers[lo]
    w = np.where(gap > 0, (pos - centers[lo]) / np.where(gap > 0, gap, 1.0), 0.0)
    return lo, hi, w


def clahe(frame, clip_limit: float = 2.0, tile_grid: Tuple[int, int] = (8, 8)) -> np.ndarray:
    """Contrast-limited adaptive histogram equalisation.

    ``tile_grid`` is ``(rows, cols)``. Each tile's histogram is clipped at
    ``clip_limit * tile_pixels / 256`` with the excess spread evenly over all
    bins, then equalised; pixels interpolate bilinearly between the four
    nearest tile-centre mappings (clamped at the borders). ``clip_limit=inf``
    disables clipping.
    """
    frame = _as_frame(frame)
    gy, gx = (int(v) for v in tile_grid)
    if gy < 1 or gx < 1:
        raise ParameterError(f"tile_grid must be at least 1x1, got {tile_grid}")
    if not clip_limit >= 1.0:
        raise ParameterError(f"clip_limit must be >= 1.0, got {clip_limit}")
    h, w = frame.shape
    if h < gy or w < gx:
        raise ParameterError(f"frame {w}x{h} is smaller than tile grid {gx}x{gy}")

    ey, ex = _tile_edges(h, gy), _tile_edges(w, gx)
    luts = np.empty((gy, gx, 256), dtype=np.float64)
    for i in range(gy):
        for j in range(gx):
            block = frame[ey[i]:ey[i + 1], ex[j]:ex[j + 1]]
            luts[i, j] = _tile_lut(block, clip_limit)

    y0, y1, wy = _interp_axis(h, ey)
    x0, x1, wx = _interp_axis(w, ex)
    v = frame.astype(np.intp)
    Y0, Y1 = y0[:, None], y1[:, None]
    X0, X1 = x0[None, :], x1[None, :]
    WY, WX = wy[:, None], wx[None, :]
    top = (1 - WX) * luts[Y0, X0, v] + WX * luts[Y0, X1, v]
    bottom = (1 - WX) * luts[Y1, X0, v] + WX * luts[Y1, X1, v]
    return to_uint8(round_half_away((1 - WY) * top + WY * bottom))


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3 * sigma)
    i = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(i * i) / (2.0 * sigma * sigma))
    return k / k.sum()


def _convolve_axis(a: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = len(kernel) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(a, pad, mode="reflect")
    windows = sliding_window_view(padded, len(kernel), axis=axis)
    return windows @ kernel


def gaussian_blur(frame, sigma: float = 1.0) -> np.ndarray:
    """Separable Gaussian blur, radius ``ceil(3 * sigma)``."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    frame = _as_frame(frame)
    k = gaussian_kernel(sigma)
    out = _convolve_axis(frame.astype(np.float64), k, axis=1)
    out = _convolve_axis(out, k, axis=0)
    return to_uint8(round_half_away(out))


def edge_kernel(frame) -> np.ndarray:
    """3x3 Laplacian (8-neighbour) response clamped to [0, 255]."""
    frame = _as_frame(frame)
    padded = np.pad(frame.astype(np.int64), 1, mode="reflect")
    windows = sliding_window_view(padded, (3, 3))
    return to_uint8(np.einsum("ijkl,kl->ij", windows, LAPLACIAN))


def _neighbourhood(frame: np.ndarray, reduce) -> np.ndarray:
    padded = np.pad(frame, 1, mode="edge")
    return reduce(sliding_window_view(padded, (3, 3)), axis=(2, 3)).astype(np.uint8)


def erode(frame) -> np.ndarray:
    return _neighbourhood(_as_frame(frame), np.min)


def dilate(frame) -> np.ndarray:
    return _neighbourhood(_as_frame(frame), np.max)


def morphology(frame, op: str = "open") -> np.ndarray:
    """Grayscale morphology with a 3x3 square element.

    ``open`` is erosion followed by dilation; ``close`` is dilation followed by
    erosion.
    """
    if op == "erode":
        return erode(frame)
    if op == "dilate":
        return dilate(frame)
    if op == "open":
        return dilate(erode(frame))
    if op == "close":
        return erode(dilate(frame))
    raise ParameterError(f"unknown morphology op {op!r}, expected one of {MORPH_OPS}")


@dataclass(frozen=True)
class AugmentSpec:
    """One configured augmentation, e.g. ``AugmentSpec("gamma", {"gamma": 0.5})``."""

    op: str
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.op not in AUGMENT_OPS:
            raise ParameterError(f"unknown augmentation {self.op!r}, expected one of {AUGMENT_OPS}")
        allowed = _PARAMS[self.op]
        unknown = set(self.params) - set(allowed)
        if unknown:
            raise ParameterError(f"{self.op}: unknown parameter(s) {sorted(unknown)}")
        p = self.resolved()
        if self.op == "gamma" and not p["gamma"] > 0:
            raise ParameterError("gamma must be > 0")
        if self.op == "gaussian_blur" and not p["sigma"] > 0:
            raise ParameterError("sigma must be > 0")
        if self.op == "clahe":
            if not p["clip_limit"] >= 1.0:
                raise ParameterError("clip_limit must be >= 1.0")
            grid = tuple(p["tile_grid"])
            if len(grid) != 2 or min(grid) < 1:
                raise ParameterError("tile_grid must be two integers >= 1")
        if self.op == "morphology" and p["operation"] not in MORPH_OPS:
            raise ParameterError(f"morphology op must be one of {MORPH_OPS}")

    def resolved(self) -> Dict[str, Any]:
        return {**_PARAMS[self.op], **self.params}

    @property
    def name(self) -> str:
        """Short stable tag used in archive names, e.g. ``gamma-0.5``."""
        p = self.resolved()
        if self.op == "gamma":
            return f"gamma-{p['gamma']:g}"
        if self.op == "clahe":
            gy, gx = p["tile_grid"]
            return f"clahe-{p['clip_limit']:g}-{gy}x{gx}"
        if self.op == "gaussian_blur":
            return f"blur-{p['sigma']:g}"
        if self.op == "morphology":
            return f"morph-{p['operation']}"
        return self.op

    def to_json(self) -> dict:
        return {"op": self.op, **self.resolved()}

    @classmethod
    def from_json(cls, obj: dict) -> "AugmentSpec":
        obj = dict(obj)
        op = obj.pop("op")
        if op == "clahe" and "tile_grid" in obj:
            obj["tile_grid"] = tuple(obj["tile_grid"])
        return cls(op, obj)


_PARAMS = {
    "gamma": {"gamma": 2.0},
    "hist_eq": {},
    "clahe": {"clip_limit": 2.0, "tile_grid": (8, 8)},
    "gaussian_blur": {"sigma": 1.0},
    "edge": {},
    "morphology": {"operation": "open"},
}

DEFAULT_AUGMENTS = (
    AugmentSpec("gamma", {"gamma": 0.5}),
    AugmentSpec("gamma", {"gamma": 2.0}),
    AugmentSpec("clahe", {"clip_limit": 2.0, "tile_grid": (8, 8)}),
    AugmentSpec("gaussian_blur", {"sigma": 1.0}),
)


def apply_augment(frame, spec: AugmentSpec) -> np.ndarray:
    p = spec.resolved()
    if spec.op == "gamma":
        return gamma_contrast(frame, p["gamma"])
    if spec.op == "hist_eq":
        return hist_equalize(frame)
    if spec.op == "clahe":
        return clahe(frame, p["clip_limit"], tuple(p["tile_grid"]))
    if spec.op == "gaussian_blur":
        return gaussian_blur(frame, p["sigma"])
    if spec.op == "edge":
        return edge_kernel(frame)
    return morphology(frame, p["operation"])


def augment_clip(frames: Sequence[np.ndarray], spec: AugmentSpec) -> np.ndarray:
    """Apply ``spec`` to every frame independently; returns ``(n, H, W)``."""
    return np.stack([apply_augment(f, spec) for f in frames])
