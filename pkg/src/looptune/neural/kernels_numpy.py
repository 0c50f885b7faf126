"""NumPy reference implementation of the 1D convolution kernels.

Shapes: x (batch, length, in_ch), w (width, in_ch, out_ch), b (out_ch,).
Valid cross-correlation: output length = length - width + 1.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeMismatch(Exception):
    pass


def _check(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None) -> None:
    if x.ndim != 3 or w.ndim != 3:
        raise ShapeMismatch(f"expected 3-d x and w, got {x.shape} and {w.shape}")
    if x.shape[2] != w.shape[1]:
        raise ShapeMismatch(f"in_ch mismatch: x {x.shape} vs w {w.shape}")
    if w.shape[0] > x.shape[1]:
        raise ShapeMismatch(f"kernel width {w.shape[0]} exceeds length {x.shape[1]}")
    if b is not None and b.shape != (w.shape[2],):
        raise ShapeMismatch(f"bias shape {b.shape} vs out_ch {w.shape[2]}")


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check(x, w, b)
    win = sliding_window_view(x, w.shape[0], axis=1)   # (B, Lout, Cin, K)
    return np.einsum("blck,kco->blo", win, w) + b


def conv1d_backward(x: np.ndarray, w: np.ndarray, dy: np.ndarray
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    _check(x, w)
    k = w.shape[0]
    if dy.shape != (x.shape[0], x.shape[1] - k + 1, w.shape[2]):
        raise ShapeMismatch(f"dy shape {dy.shape} inconsistent with x {x.shape}, w {w.shape}")
    win = sliding_window_view(x, k, axis=1)            # (B, Lout, Cin, K)
    dw = np.einsum("blck,blo->kco", win, dy)
    db = dy.sum(axis=(0, 1))
    dyp = np.pad(dy, ((0, 0), (k - 1, k - 1), (0, 0)))
    win_dy = sliding_window_view(dyp, k, axis=1)       # (B, L, Cout, K)
    dx = np.einsum("btok,kco->btc", win_dy, w[::-1])
    return dx, dw, db
