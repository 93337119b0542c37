# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, cos, sin

cnp.import_array()


def sample_terms(axes, coeffs, centers, precisions, wavevecs):
    """Compiled counterpart of ``_sampler_py.sample_terms`` (same contract)."""
    cdef int d = len(axes)
    if d < 1 or d > 3:
        raise ValueError("between 1 and 3 axes are supported")
    cdef int ntk = len(coeffs)
    shape = tuple(len(ax) for ax in axes)
    padded = [np.ascontiguousarray(ax, dtype=np.float64) for ax in axes]
    while len(padded) < 3:
        padded.append(np.zeros(1))
    cdef double[::1] ax0 = padded[0]
    cdef double[::1] ax1 = padded[1]
    cdef double[::1] ax2 = padded[2]
    cdef Py_ssize_t n0 = ax0.shape[0], n1 = ax1.shape[0], n2 = ax2.shape[0]

    cdef double[:, ::1] mu = np.zeros((ntk, 3))
    cdef double[:, :, ::1] a = np.zeros((ntk, 3, 3))
    cdef double[:, ::1] kv = np.zeros((ntk, 3))
    cdef double[::1] cre = np.zeros(ntk)
    cdef double[::1] cim = np.zeros(ntk)
    cdef int t, i, j
    for t in range(ntk):
        c = complex(coeffs[t])
        cre[t] = c.real
        cim[t] = c.imag
        for i in range(d):
            mu[t, i] = centers[t][i]
            kv[t, i] = wavevecs[t][i]
            for j in range(d):
                a[t, i, j] = precisions[t][i][j]

    out = np.zeros((n0, n1, n2), dtype=np.complex128)
    cdef double[:, :, ::1] ore = np.zeros((n0, n1, n2))
    cdef double[:, :, ::1] oim = np.zeros((n0, n1, n2))
    cdef Py_ssize_t p, q, r
    cdef double d0, d1, d2, e0, e1, ph0, ph1, quad, phase, mag
    for t in range(ntk):
        for p in range(n0):
            d0 = ax0[p] - mu[t, 0]
            e0 = a[t, 0, 0] * d0 * d0
            ph0 = kv[t, 0] * ax0[p]
            for q in range(n1):
                d1 = ax1[q] - mu[t, 1]
                e1 = e0 + a[t, 1, 1] * d1 * d1 + 2.0 * a[t, 0, 1] * d0 * d1
                ph1 = ph0 + kv[t, 1] * ax1[q]
                for r in range(n2):
                    d2 = ax2[r] - mu[t, 2]
                    quad = e1 + a[t, 2, 2] * d2 * d2 + 2.0 * (a[t, 0, 2] * d0 + a[t, 1, 2] * d1) * d2
                    if quad > 745.0:
                        continue
                    phase = ph1 + kv[t, 2] * ax2[r]
                    mag = exp(-quad)
                    ore[p, q, r] += mag * (cre[t] * cos(phase) - cim[t] * sin(phase))
                    oim[p, q, r] += mag * (cre[t] * sin(phase) + cim[t] * cos(phase))
    out.real = np.asarray(ore)
    out.imag = np.asarray(oim)
    return out.reshape(shape)
