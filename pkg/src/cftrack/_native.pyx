# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the per-pixel feature kernels in ``_reference``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, atan2, floor, sqrt

cnp.import_array()


def hog_cell_histograms(intensity, int cell, int nbins):
    """See ``_reference.hog_cell_histograms``; identical arithmetic."""
    cdef double[:, ::1] img = np.ascontiguousarray(intensity, dtype=np.float64)
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef Py_ssize_t cells_y = h // cell
    cdef Py_ssize_t cells_x = w // cell
    out = np.zeros((cells_y, cells_x, nbins), dtype=np.float64)
    cdef double[:, :, ::1] hist = out
    cdef Py_ssize_t i, j, iu, idn, jl, jr, ci, cj
    cdef double dx, dy, mag, ang, pos, frac
    cdef long lo, b0, b1
    for i in range(h):
        iu = i - 1 if i > 0 else 0
        idn = i + 1 if i < h - 1 else h - 1
        ci = i // cell
        for j in range(w):
            jl = j - 1 if j > 0 else 0
            jr = j + 1 if j < w - 1 else w - 1
            dx = img[i, jr] - img[i, jl]
            dy = img[idn, j] - img[iu, j]
            mag = sqrt(dx * dx + dy * dy)
            ang = atan2(dy, dx)
            if ang < 0:
                ang += M_PI
            if ang >= M_PI:
                ang -= M_PI
            pos = ang / M_PI * nbins - 0.5
            lo = <long>floor(pos)
            frac = pos - lo
            b0 = lo % nbins
            if b0 < 0:
                b0 += nbins
            b1 = b0 + 1
            if b1 == nbins:
                b1 = 0
            cj = j // cell
            hist[ci, cj, b0] += mag * (1.0 - frac)
            hist[ci, cj, b1] += mag * frac
    return out


def bilinear_resample(image, double x0, double y0, double src_w, double src_h,
                      int out_w, int out_h):
    """See ``_reference.bilinear_resample``; identical arithmetic."""
    arr = np.asarray(image, dtype=np.float64)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, None]
    cdef double[:, :, ::1] img = np.ascontiguousarray(arr)
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef Py_ssize_t nch = img.shape[2]
    out = np.empty((out_h, out_w, nch), dtype=np.float64)
    cdef double[:, :, ::1] res = out
    cdef Py_ssize_t u, v, c, xi0, xi1, yi0, yi1
    cdef double x, y, wx, wy, xf, yf, top, bottom
    for v in range(out_h):
        y = y0 + (v + 0.5) * (src_h / out_h) - 0.5
        yf = floor(y)
        wy = y - yf
        yi0 = <Py_ssize_t>yf
        if yi0 < 0:
            yi0 = 0
        elif yi0 > h - 1:
            yi0 = h - 1
        yi1 = yi0 + 1
        if yi1 > h - 1:
            yi1 = h - 1
        for u in range(out_w):
            x = x0 + (u + 0.5) * (src_w / out_w) - 0.5
            xf = floor(x)
            wx = x - xf
            xi0 = <Py_ssize_t>xf
            if xi0 < 0:
                xi0 = 0
            elif xi0 > w - 1:
                xi0 = w - 1
            xi1 = xi0 + 1
            if xi1 > w - 1:
                xi1 = w - 1
            for c in range(nch):
                top = (1.0 - wx) * img[yi0, xi0, c] + wx * img[yi0, xi1, c]
                bottom = (1.0 - wx) * img[yi1, xi0, c] + wx * img[yi1, xi1, c]
                res[v, u, c] = (1.0 - wy) * top + wy * bottom
    return out[:, :, 0] if squeeze else out
