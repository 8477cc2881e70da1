"""Gaussian kernel correlation surfaces over all cyclic shifts.

The first row of a kernel Gram matrix is the plane of kernel values between a
probe patch and every 2-D cyclic shift of a template. Computing it naively is
quadratic in cell count; the circular cross-correlation inside the squared
distance makes it an FFT away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, NumericalError, OracleScaleError
from .spectral import build_circulant, dft2, idft2

__all__ = ["KernelCorrelation", "gaussian_correlation", "kernel_row_to_gram"]


@dataclass(frozen=True)
class KernelCorrelation:
    """First row of a circulant kernel Gram matrix as a 2-D plane.

    ``plane[i, j]`` is the kernel value between the probe cyclically shifted
    by ``(i, j)`` and the template. With this orientation the response map
    ``C(plane) @ alpha`` of a probe translated by ``(u, v)`` relative to the
    template peaks at displacement ``(u, v)``. Gaussian kernel values lie in
    ``(0, 1]`` with 1 attained only at an exact match.
    """

    plane: np.ndarray
    sigma: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.plane.shape


def gaussian_correlation(
    template: np.ndarray, probe: np.ndarray, sigma: float
) -> KernelCorrelation:
    """Gaussian kernel values between all cyclic shifts of ``probe`` and ``template``.

    Both arguments are (H, W, C) feature maps (a 2-D array is treated as one
    channel). The squared distance at each shift is evaluated through the
    channel-summed circular cross-correlation and normalized by cell count
    times channel count, so ``sigma`` is comparable across template sizes and
    feature dimensionalities. Tiny negative distance residue from the
    spectral round-trip is clamped to zero before exponentiation.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    template = np.asarray(template, dtype=float)
    probe = np.asarray(probe, dtype=float)
    if template.ndim == 2:
        template = template[:, :, None]
    if probe.ndim == 2:
        probe = probe[:, :, None]
    if template.shape != probe.shape:
        raise InvalidDimensionError(
            f"template shape {template.shape} != probe shape {probe.shape}"
        )
    h, w, c = template.shape
    cross_spec = np.zeros((h, w), dtype=complex)
    for ch in range(c):
        cross_spec += dft2(probe[:, :, ch]) * np.conj(dft2(template[:, :, ch]))
    cross = idft2(cross_spec)
    sq_dist = np.sum(template * template) + np.sum(probe * probe) - 2.0 * cross
    np.maximum(sq_dist, 0.0, out=sq_dist)
    plane = np.exp(-sq_dist / (sigma * sigma * h * w * c))
    return KernelCorrelation(plane=plane, sigma=float(sigma))


def kernel_row_to_gram(
    k: KernelCorrelation, require_spd: bool = False
) -> np.ndarray:
    """Materialize the full Gram matrix of a kernel correlation row.

    Oracle-scale helper (guarded by the dense-size limit). With
    ``require_spd`` the eigenvalues are checked to be positive, which holds
    for Gaussian kernels over distinct samples but is verified rather than
    assumed.
    """
    gram = build_circulant(k.plane)
    if gram.shape[0] > 64 * 64:  # pragma: no cover - build_circulant guards first
        raise OracleScaleError("gram too large")
    if require_spd:
        sym_err = np.max(np.abs(gram - gram.T))
        if sym_err > 1e-10 * max(1.0, np.max(np.abs(gram))):
            raise NumericalError(f"gram asymmetry {sym_err:.3e}")
        eigvals = np.linalg.eigvalsh((gram + gram.T) / 2)
        if eigvals.min() <= 0:
            raise NumericalError(
                f"gram not positive definite (min eigenvalue {eigvals.min():.3e})"
            )
    return gram
