"""Feature planes consumed by the kernel solvers.

One feature map per kernel: a color-family map (color-name probabilities,
cell-averaged RGB, or mean-removed gray) and a gradient-orientation map, both
on the same cell grid, optionally PCA-reduced, and Hann-banded before any
spectral processing.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import backend
from .errors import (
    InvalidDimensionError,
    OutOfFrameError,
    UnsupportedFeatureError,
)

__all__ = [
    "BoundingBox",
    "ColorNameTable",
    "PcaBasis",
    "luminance",
    "extract_patch",
    "hog",
    "color_names",
    "gray_feature",
    "rgb_cells",
    "fit_pca",
    "pca_reduce",
    "hann_window",
    "hann_band",
]

HOG_CLIP = 0.2
_NORM_EPS = 1e-12


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates, top-left origin, 0-indexed."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box sides must be positive, got {self.w} x {self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def area(self) -> float:
        return self.w * self.h

    def intersects(self, frame_shape: tuple[int, ...]) -> bool:
        fh, fw = frame_shape[:2]
        return self.x < fw and self.x + self.w > 0 and self.y < fh and self.y + self.h > 0


def luminance(frame: np.ndarray) -> np.ndarray:
    """Single intensity plane; Rec.601 weights for 3-channel input."""
    frame = np.asarray(frame, dtype=float)
    if frame.ndim == 2:
        return frame
    if frame.ndim == 3 and frame.shape[2] == 3:
        return frame @ np.array([0.299, 0.587, 0.114])
    raise InvalidDimensionError(f"expected gray or 3-channel frame, got {frame.shape}")


def extract_patch(
    frame: np.ndarray,
    box: BoundingBox,
    search_factor: float,
    out_size: tuple[int, int],
) -> np.ndarray:
    """Crop ``search_factor`` times the box around its center and resample.

    Regions leaving the frame replicate edge pixels; ``out_size`` is
    (width, height) in pixels. With factor 1 and the output size equal to an
    integer-aligned box, this reproduces the pixel crop exactly.
    """
    if search_factor < 1:
        raise ValueError("search_factor must be >= 1")
    frame = np.asarray(frame, dtype=float)
    if not box.intersects(frame.shape):
        raise OutOfFrameError(f"box {box} does not intersect frame {frame.shape[:2]}")
    out_w, out_h = out_size
    cx, cy = box.center
    region_w = box.w * search_factor
    region_h = box.h * search_factor
    return backend.bilinear_resample(
        frame,
        cx - region_w / 2.0,
        cy - region_h / 2.0,
        region_w,
        region_h,
        int(out_w),
        int(out_h),
    )


def _cell_average(values: np.ndarray, cell: int) -> np.ndarray:
    h, w = values.shape[:2]
    if h % cell or w % cell:
        raise InvalidDimensionError(
            f"{h}x{w} not divisible by cell size {cell}"
        )
    squeeze = values.ndim == 2
    if squeeze:
        values = values[:, :, None]
    pooled = values.reshape(h // cell, cell, w // cell, cell, -1).mean(axis=(1, 3))
    return pooled[:, :, 0] if squeeze else pooled


def hog(patch: np.ndarray, cell: int = 4, orientations: int = 9) -> np.ndarray:
    """Cell-histogram HOG with soft orientation binning.

    Unsigned orientations, gradient magnitudes split between the two nearest
    bins, then per-cell clipped L2 normalization (clip 0.2, renormalize).
    3-channel patches are reduced to luminance first. Output is
    (H/cell, W/cell, orientations); a zero-gradient patch maps to all zeros.
    """
    intensity = luminance(patch)
    h, w = intensity.shape
    if h % cell or w % cell:
        raise InvalidDimensionError(f"{h}x{w} not divisible by cell size {cell}")
    hist = backend.hog_cell_histograms(np.ascontiguousarray(intensity), cell, orientations)
    norms = np.sqrt(np.sum(hist * hist, axis=2, keepdims=True) + _NORM_EPS)
    clipped = np.minimum(hist / norms, HOG_CLIP)
    norms2 = np.sqrt(np.sum(clipped * clipped, axis=2, keepdims=True) + _NORM_EPS)
    return clipped / norms2


@dataclass(frozen=True)
class ColorNameTable:
    """Lookup from 5-bit-quantized RGB to 11 color-name probabilities.

    Row index is ``r_q * 1024 + g_q * 32 + b_q``; every row sums to 1.
    """

    probs: np.ndarray  # (32768, 11)

    ROWS = 32 * 32 * 32
    NAMES = (
        "black", "blue", "brown", "gray", "green", "orange",
        "pink", "purple", "red", "white", "yellow",
    )

    def __post_init__(self) -> None:
        if self.probs.shape != (self.ROWS, len(self.NAMES)):
            raise InvalidDimensionError(
                f"expected table shape {(self.ROWS, len(self.NAMES))}, got {self.probs.shape}"
            )
        if np.any(self.probs < 0):
            raise ValueError("color-name probabilities must be non-negative")
        sums = self.probs.sum(axis=1)
        if np.any(sums <= 0):
            raise ValueError("every table row needs positive mass")
        if np.max(np.abs(sums - 1.0)) > 1e-3:
            raise ValueError("table rows must sum to 1 (within 1e-3)")

    @classmethod
    def load(cls, path: str | Path) -> "ColorNameTable":
        path = Path(path)
        if path.suffix == ".npy":
            raw = np.load(path)
        else:
            with open(path) as fh:
                first = fh.readline()
            raw = np.loadtxt(path, delimiter="," if "," in first else None)
        raw = np.asarray(raw, dtype=float)
        # Validate first, then normalize away benign formatting drift.
        cls(probs=raw)
        return cls(probs=raw / raw.sum(axis=1, keepdims=True))

    @classmethod
    def synthetic(cls) -> "ColorNameTable":
        """Deterministic stand-in table built from 11 RGB prototypes.

        Soft assignments by squared distance to prototype colors; usable
        wherever a real mapping file is not supplied.
        """
        prototypes = np.array(
            [
                [0.05, 0.05, 0.05],  # black
                [0.10, 0.25, 0.90],  # blue
                [0.45, 0.30, 0.15],  # brown
                [0.50, 0.50, 0.50],  # gray
                [0.10, 0.60, 0.15],  # green
                [0.95, 0.55, 0.10],  # orange
                [0.95, 0.55, 0.75],  # pink
                [0.55, 0.15, 0.70],  # purple
                [0.90, 0.10, 0.10],  # red
                [0.95, 0.95, 0.95],  # white
                [0.95, 0.90, 0.10],  # yellow
            ]
        )
        q = (np.arange(32) + 0.5) / 32.0
        r, g, b = np.meshgrid(q, q, q, indexing="ij")
        rgb = np.stack([r.ravel(), g.ravel(), b.ravel()], axis=1)
        d2 = ((rgb[:, None, :] - prototypes[None, :, :]) ** 2).sum(axis=2)
        logits = -d2 / 0.05
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        return cls(probs=probs)

    def lookup(self, rgb: np.ndarray) -> np.ndarray:
        """Per-pixel probabilities for an (H, W, 3) image in [0, 1]."""
        q = np.clip((rgb * 32.0).astype(np.int64), 0, 31)
        idx = q[:, :, 0] * 1024 + q[:, :, 1] * 32 + q[:, :, 2]
        return self.probs[idx]


def color_names(patch: np.ndarray, table: ColorNameTable, cell: int = 4) -> np.ndarray:
    """Per-pixel color-name probabilities pooled onto the HOG cell grid."""
    patch = np.asarray(patch, dtype=float)
    if patch.ndim != 3 or patch.shape[2] != 3:
        raise UnsupportedFeatureError(
            "color-name features need a 3-channel patch; use the gray pathway"
        )
    return _cell_average(table.lookup(patch), cell)


def gray_feature(patch: np.ndarray, cell: int = 4) -> np.ndarray:
    """Mean-removed intensity, pooled onto the cell grid, one channel."""
    patch = np.asarray(patch, dtype=float)
    if patch.ndim != 2:
        raise UnsupportedFeatureError("gray feature needs a 1-channel patch")
    pooled = _cell_average(patch, cell)
    return (pooled - patch.mean())[:, :, None]


def rgb_cells(patch: np.ndarray, cell: int = 4) -> np.ndarray:
    """Cell-averaged RGB, the fallback color feature when no table is given."""
    patch = np.asarray(patch, dtype=float)
    if patch.ndim != 3 or patch.shape[2] != 3:
        raise UnsupportedFeatureError("RGB cells need a 3-channel patch")
    return _cell_average(patch, cell)


@dataclass(frozen=True)
class PcaBasis:
    """Frozen per-cell channel projection.

    Rows of ``projection`` are orthonormal; when the training data had rank
    below ``output_dim`` the trailing rows are arbitrary orthonormal
    completions and ``low_rank`` is set.
    """

    input_dim: int
    output_dim: int
    projection: np.ndarray  # (output_dim, input_dim)
    mean: np.ndarray  # (input_dim,)
    low_rank: bool


def fit_pca(samples: list[np.ndarray], output_dim: int = 4) -> PcaBasis:
    """Principal directions of the per-cell channel vectors of the samples.

    Deterministic sign convention: each component's largest-magnitude entry
    is made positive.
    """
    if not samples:
        raise ValueError("need at least one sample map")
    channels = samples[0].shape[2]
    if output_dim > channels:
        raise InvalidDimensionError(
            f"cannot keep {output_dim} components of {channels} channels"
        )
    x = np.concatenate([s.reshape(-1, channels) for s in samples], axis=0)
    if x.shape[0] < channels:
        raise InvalidDimensionError("fewer cells than channels")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / x.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    rank_tol = max(eigvals[0], 0.0) * 1e-10 + np.finfo(float).tiny
    rank = int(np.sum(eigvals > rank_tol))
    projection = eigvecs[:, :output_dim].T.copy()
    for row in projection:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return PcaBasis(
        input_dim=channels,
        output_dim=output_dim,
        projection=projection,
        mean=mean,
        low_rank=rank < output_dim,
    )


def pca_reduce(fm: np.ndarray, basis: PcaBasis) -> np.ndarray:
    """Project each cell's channel vector onto the basis after mean removal."""
    if fm.shape[2] != basis.input_dim:
        raise InvalidDimensionError(
            f"map has {fm.shape[2]} channels, basis expects {basis.input_dim}"
        )
    return (fm - basis.mean) @ basis.projection.T


def hann_window(height: int, width: int) -> np.ndarray:
    """Separable 2-D Hann window, zero on every border cell."""
    if height < 2 or width < 2:
        raise InvalidDimensionError("Hann window needs at least 2 cells per axis")
    hy = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(height) / (height - 1)))
    hx = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(width) / (width - 1)))
    return hy[:, None] * hx[None, :]


def hann_band(fm: np.ndarray) -> np.ndarray:
    """Multiply every channel by the Hann window (suppresses wrap-around seams)."""
    window = hann_window(fm.shape[0], fm.shape[1])
    if fm.ndim == 2:
        return fm * window
    return fm * window[:, :, None]
