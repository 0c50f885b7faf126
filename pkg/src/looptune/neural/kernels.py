"""Kernel backend selection: compiled extension when available, NumPy
fallback otherwise. Set LOOPTUNE_PURE_PYTHON=1 to force the fallback."""

from __future__ import annotations

import os

import numpy as np

from .kernels_numpy import ShapeMismatch, _check
from .kernels_numpy import conv1d_backward as _conv1d_backward_np
from .kernels_numpy import conv1d_forward as _conv1d_forward_np

if os.environ.get("LOOPTUNE_PURE_PYTHON"):
    _ext = None
else:
    try:
        from . import _kernels as _ext
    except ImportError:
        _ext = None

BACKEND = "cython" if _ext is not None else "numpy"


def _c(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Valid cross-correlation: x (B,L,Cin), w (K,Cin,Cout), b (Cout,)."""
    if _ext is None:
        return _conv1d_forward_np(np.asarray(x, float), np.asarray(w, float),
                                  np.asarray(b, float))
    x, w, b = _c(x), _c(w), _c(b)
    _check(x, w, b)
    return _ext.conv1d_forward_cy(x, w, b)


def conv1d_backward(x: np.ndarray, w: np.ndarray, dy: np.ndarray):
    """Gradients (dx, dw, db) of sum(dy * conv1d_forward(x, w, b))."""
    if _ext is None:
        return _conv1d_backward_np(np.asarray(x, float), np.asarray(w, float),
                                   np.asarray(dy, float))
    x, w, dy = _c(x), _c(w), _c(dy)
    _check(x, w)
    if dy.shape != (x.shape[0], x.shape[1] - w.shape[0] + 1, w.shape[2]):
        raise ShapeMismatch(f"dy shape {dy.shape} inconsistent with x/w")
    return _ext.conv1d_backward_cy(x, w, dy)
