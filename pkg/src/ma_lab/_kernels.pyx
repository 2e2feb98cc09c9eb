# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled beam-power loops; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin
from scipy.linalg.cython_blas cimport zgemm

cnp.import_array()


def beam_power_1d(x, w, grid, double k):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double complex[::1] wv = np.ascontiguousarray(w, dtype=np.complex128)
    cdef const double[::1] gv = np.ascontiguousarray(grid, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], m = gv.shape[0], i, j
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double re, im, ph, c, s
    with nogil:
        for i in range(m):
            re = 0.0
            im = 0.0
            for j in range(n):
                ph = k * xv[j] * gv[i]
                c = cos(ph)
                s = sin(ph)
                re += wv[j].real * c - wv[j].imag * s
                im += wv[j].real * s + wv[j].imag * c
            ov[i] = re * re + im * im
    return out


def beam_power_2d(x, y, w, ugrid, vgrid, double k):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double complex[::1] wv = np.ascontiguousarray(w, dtype=np.complex128)
    cdef const double[::1] uv = np.ascontiguousarray(ugrid, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(vgrid, dtype=np.float64)
    cdef int n = <int>xv.shape[0], mu = <int>uv.shape[0], mv = <int>vv.shape[0]
    cdef int i, j, l
    # eu[i, j] = w_j exp(j k x_j u_i), ev[j, l] = exp(j k y_j v_l)
    cdef double complex[:, ::1] eu = np.empty((mu, n), dtype=np.complex128)
    cdef double complex[:, ::1] ev = np.empty((n, mv), dtype=np.complex128)
    cdef double complex[:, ::1] c = np.empty((mu, mv), dtype=np.complex128)
    out = np.empty((mu, mv), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef double ph, re, im
    cdef double complex one = 1.0, zero = 0.0
    cdef char tr = b'N'
    with nogil:
        for i in range(mu):
            for j in range(n):
                ph = k * xv[j] * uv[i]
                eu[i, j] = wv[j] * (cos(ph) + 1j * sin(ph))
        for j in range(n):
            for l in range(mv):
                ph = k * yv[j] * vv[l]
                ev[j, l] = cos(ph) + 1j * sin(ph)
        # row-major C = eu @ ev is column-major C^T = ev^T eu^T
        zgemm(&tr, &tr, &mv, &mu, &n, &one, &ev[0, 0], &mv, &eu[0, 0], &n, &zero,
              &c[0, 0], &mv)
        for i in range(mu):
            for l in range(mv):
                re = c[i, l].real
                im = c[i, l].imag
                ov[i, l] = re * re + im * im
    return out
