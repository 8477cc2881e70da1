"""2-D DFT conventions and circulant-operator algebra.

Correlation-filter models treat every 2-D cyclic shift of a base patch as a
training sample, which makes all Gram and response operators block-circulant.
Such operators are diagonalized by the 2-D DFT, so applying them reduces to
element-wise spectral products. This module pins down the conventions every
other module relies on:

* forward transform unnormalized, inverse divides by plane size;
* a circulant operator is identified by its *first row* ``k``, i.e. the plane
  of values indexed by shift offset; its eigenvalue array is ``conj(dft2(k))``;
* dense materializations (for oracle-scale cross-checks) flatten planes in
  row-major order.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidDimensionError, OracleScaleError, SymmetryViolationError

# Imaginary residue above this fraction of the plane norm means the input
# spectrum cannot have come from a real plane.
IMAG_RESIDUE_TOL = 1e-6

# Size guard for dense materializations.
ORACLE_MAX_CELLS = 4096


def _require_plane(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p)
    if p.ndim != 2 or p.size == 0:
        raise InvalidDimensionError(
            f"{name} must be a non-empty 2-D plane, got shape {p.shape}"
        )
    return p


def dft2(plane: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2-D DFT of a real plane."""
    plane = _require_plane(plane, "plane")
    return np.fft.fft2(plane)


def idft2(spectrum: np.ndarray) -> np.ndarray:
    """Normalized inverse 2-D DFT, returning the real plane.

    The input must be the spectrum of a real plane. The imaginary residue of
    the inverse is checked against ``IMAG_RESIDUE_TOL`` (relative to the plane
    norm) before being discarded.
    """
    spectrum = _require_plane(spectrum, "spectrum")
    inv = np.fft.ifft2(spectrum)
    real = inv.real
    residue = np.linalg.norm(inv.imag)
    scale = np.linalg.norm(real)
    if residue > IMAG_RESIDUE_TOL * max(scale, np.finfo(float).tiny):
        raise SymmetryViolationError(
            f"imaginary residue {residue:.3e} exceeds {IMAG_RESIDUE_TOL} of plane norm {scale:.3e}"
        )
    return real


def cyclic_shift(plane: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Cyclically shift plane content by ``(dy, dx)`` (down, right)."""
    return np.roll(np.roll(plane, dy, axis=0), dx, axis=1)


def spectrum_of_operator(first_row: np.ndarray) -> np.ndarray:
    """Eigenvalue array of the circulant operator with ``first_row``.

    With row-major flattening, applying the operator is a circular
    cross-correlation against ``first_row``, which is element-wise
    multiplication by ``conj(dft2(first_row))`` in the spectral domain. For
    the symmetric first rows produced by kernel auto-correlation the
    conjugation is a no-op; it matters for general (e.g. randomly drawn)
    first rows.
    """
    return np.conj(dft2(first_row))


def circulant_matvec(first_row: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply the circulant operator identified by ``first_row`` to plane ``v``."""
    first_row = _require_plane(first_row, "first_row")
    v = _require_plane(v, "v")
    if first_row.shape != v.shape:
        raise InvalidDimensionError(
            f"first_row shape {first_row.shape} != v shape {v.shape}"
        )
    return idft2(spectrum_of_operator(first_row) * dft2(v))


def build_circulant(first_row: np.ndarray) -> np.ndarray:
    """Materialize the circulant operator as a dense square matrix.

    Row ``i`` is ``first_row`` cyclically shifted by the i-th 2-D offset in
    row-major offset order, flattened row-major, so that
    ``build_circulant(k) @ v.ravel()`` equals ``circulant_matvec(k, v).ravel()``.
    Intended for oracle-scale checks only.
    """
    first_row = _require_plane(first_row, "first_row")
    h, w = first_row.shape
    n = h * w
    if n > ORACLE_MAX_CELLS:
        raise OracleScaleError(f"{n} cells exceeds oracle guard {ORACLE_MAX_CELLS}")
    out = np.empty((n, n), dtype=float)
    for dy in range(h):
        for dx in range(w):
            out[dy * w + dx] = cyclic_shift(first_row, dy, dx).ravel()
    return out
