"""Pure-numpy implementations of the per-pixel feature kernels.

These are the fallback twins of the compiled routines in ``_native``; both
use identical arithmetic so results agree to floating-point rounding.
"""

from __future__ import annotations

import numpy as np


def hog_cell_histograms(intensity: np.ndarray, cell: int, nbins: int) -> np.ndarray:
    """Per-cell orientation histograms of gradient magnitude.

    Gradients are symmetric differences with replicated edges (no 1/2
    factor); orientations are unsigned in [0, pi) and each pixel's magnitude
    is split linearly between the two nearest bin centers (bin m centered at
    (m + 0.5) * pi / nbins, wrapping). Returns (H/cell, W/cell, nbins).
    """
    intensity = np.ascontiguousarray(intensity, dtype=float)
    h, w = intensity.shape
    dx = intensity[:, np.minimum(np.arange(w) + 1, w - 1)] - intensity[
        :, np.maximum(np.arange(w) - 1, 0)
    ]
    dy = intensity[np.minimum(np.arange(h) + 1, h - 1), :] - intensity[
        np.maximum(np.arange(h) - 1, 0), :
    ]
    mag = np.sqrt(dx * dx + dy * dy)
    ang = np.arctan2(dy, dx) % np.pi
    pos = ang / np.pi * nbins - 0.5
    lo = np.floor(pos)
    frac = pos - lo
    b0 = lo.astype(np.int64) % nbins
    b1 = (b0 + 1) % nbins

    cells_y, cells_x = h // cell, w // cell
    ci = np.arange(h) // cell
    cj = np.arange(w) // cell
    base = (ci[:, None] * cells_x + cj[None, :]) * nbins
    size = cells_y * cells_x * nbins
    hist = np.bincount(
        (base + b0).ravel(), weights=(mag * (1.0 - frac)).ravel(), minlength=size
    )
    hist += np.bincount(
        (base + b1).ravel(), weights=(mag * frac).ravel(), minlength=size
    )
    return hist.reshape(cells_y, cells_x, nbins)


def bilinear_resample(
    image: np.ndarray,
    x0: float,
    y0: float,
    src_w: float,
    src_h: float,
    out_w: int,
    out_h: int,
) -> np.ndarray:
    """Bilinear resample of the rectangle (x0, y0, src_w, src_h) to (out_w, out_h).

    Output pixel (u, v) samples source coordinates
    ``x0 + (u + 0.5) * src_w / out_w - 0.5`` (likewise for y); source indices
    are clamped, which replicates edge pixels for regions leaving the image.
    """
    image = np.asarray(image, dtype=float)
    squeeze = image.ndim == 2
    if squeeze:
        image = image[:, :, None]
    h, w = image.shape[:2]
    xs = x0 + (np.arange(out_w) + 0.5) * (src_w / out_w) - 0.5
    ys = y0 + (np.arange(out_h) + 0.5) * (src_h / out_h) - 0.5
    xf = np.floor(xs)
    yf = np.floor(ys)
    wx = xs - xf
    wy = ys - yf
    xi0 = np.clip(xf.astype(np.int64), 0, w - 1)
    xi1 = np.clip(xi0 + 1, 0, w - 1)
    yi0 = np.clip(yf.astype(np.int64), 0, h - 1)
    yi1 = np.clip(yi0 + 1, 0, h - 1)
    top = (1.0 - wx[None, :, None]) * image[yi0][:, xi0] + wx[None, :, None] * image[
        yi0
    ][:, xi1]
    bottom = (1.0 - wx[None, :, None]) * image[yi1][:, xi0] + wx[None, :, None] * image[
        yi1
    ][:, xi1]
    out = (1.0 - wy[:, None, None]) * top + wy[:, None, None] * bottom
    return out[:, :, 0] if squeeze else out
