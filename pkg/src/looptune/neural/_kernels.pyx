# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled 1D convolution kernels (valid cross-correlation).

Same contract as kernels_numpy; selected at import by looptune.neural.kernels.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def conv1d_forward_cy(cnp.float64_t[:, :, ::1] x,
                      cnp.float64_t[:, :, ::1] w,
                      cnp.float64_t[::1] b):
    cdef Py_ssize_t B = x.shape[0], L = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t K = w.shape[0], O = w.shape[2]
    cdef Py_ssize_t Lout = L - K + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=3] y = np.empty((B, Lout, O))
    cdef cnp.float64_t[:, :, ::1] yv = y
    cdef Py_ssize_t n, l, c, k, o
    cdef double acc
    for n in range(B):
        for l in range(Lout):
            for o in range(O):
                acc = b[o]
                for k in range(K):
                    for c in range(C):
                        acc += x[n, l + k, c] * w[k, c, o]
                yv[n, l, o] = acc
    return y


def conv1d_backward_cy(cnp.float64_t[:, :, ::1] x,
                       cnp.float64_t[:, :, ::1] w,
                       cnp.float64_t[:, :, ::1] dy):
    cdef Py_ssize_t B = x.shape[0], L = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t K = w.shape[0], O = w.shape[2]
    cdef Py_ssize_t Lout = L - K + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=3] dx = np.zeros((B, L, C))
    cdef cnp.ndarray[cnp.float64_t, ndim=3] dw = np.zeros((K, C, O))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] db = np.zeros(O)
    cdef cnp.float64_t[:, :, ::1] dxv = dx
    cdef cnp.float64_t[:, :, ::1] dwv = dw
    cdef cnp.float64_t[::1] dbv = db
    cdef Py_ssize_t n, l, c, k, o
    cdef double g
    for n in range(B):
        for l in range(Lout):
            for o in range(O):
                g = dy[n, l, o]
                dbv[o] += g
                for k in range(K):
                    for c in range(C):
                        dwv[k, c, o] += x[n, l + k, c] * g
                        dxv[n, l + k, c] += w[k, c, o] * g
    return dx, dw, db
