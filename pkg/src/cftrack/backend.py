"""Selection of the compiled feature kernels at import time.

The compiled extension (``cftrack._native``) and the pure-numpy module
(``cftrack._reference``) implement the same two hot routines with identical
arithmetic. The compiled one is used when importable; set
``CFTRACK_BACKEND=python`` to force the fallback. ``benchmarks/compare_backends.py``
times the two against each other.
"""

from __future__ import annotations

import os

from . import _reference

_impl = _reference
_name = "python"

if os.environ.get("CFTRACK_BACKEND", "").lower() != "python":
    try:
        from . import _native  # type: ignore[attr-defined]

        _impl = _native
        _name = "native"
    except ImportError:
        pass


def active_backend() -> str:
    """Name of the backend in use: ``"native"`` or ``"python"``."""
    return _name


hog_cell_histograms = _impl.hog_cell_histograms
bilinear_resample = _impl.bilinear_resample
