# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``; same layout and results."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def elementary_amplitudes(vectors, Py_ssize_t axis=-1, int sign=1):
    cdef const double[:, ::1] v = np.ascontiguousarray(vectors, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t size = (<Py_ssize_t>1) << n
    out = np.zeros((size, 4), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t c, j
    cdef Py_ssize_t keep = 0 if sign > 0 else 1
    cdef double ax, ay, az
    with nogil:
        for c in range(size):
            if axis >= 0 and ((c >> (n - 1 - axis)) & 1) != keep:
                continue
            ax = 0.0
            ay = 0.0
            az = 0.0
            for j in range(n):
                if (c >> (n - 1 - j)) & 1:
                    ax = ax + (-v[j, 0])
                    ay = ay + (-v[j, 1])
                    az = az + (-v[j, 2])
                else:
                    ax = ax + v[j, 0]
                    ay = ay + v[j, 1]
                    az = az + v[j, 2]
            o[c, 1] = ax
            o[c, 2] = ay
            o[c, 3] = az
    return out


def project_amplitudes(amps, Py_ssize_t n, subset):
    # Neumaier-compensated accumulation per output cell
    cdef const double[:, ::1] a = np.ascontiguousarray(amps, dtype=np.float64)
    cdef const Py_ssize_t[::1] sub = np.ascontiguousarray(subset, dtype=np.intp)
    cdef Py_ssize_t k = sub.shape[0]
    cdef Py_ssize_t size = (<Py_ssize_t>1) << n
    out = np.zeros(((<Py_ssize_t>1) << k, 4), dtype=np.float64)
    comp = np.zeros(((<Py_ssize_t>1) << k, 4), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[:, ::1] e = comp
    cdef Py_ssize_t c, r, t, q
    cdef double s, x, tot
    with nogil:
        for c in range(size):
            t = 0
            for r in range(k):
                t = (t << 1) | ((c >> (n - 1 - sub[r])) & 1)
            for q in range(4):
                s = o[t, q]
                x = a[c, q]
                tot = s + x
                if fabs(s) >= fabs(x):
                    e[t, q] += (s - tot) + x
                else:
                    e[t, q] += (x - tot) + s
                o[t, q] = tot
        for t in range((<Py_ssize_t>1) << k):
            for q in range(4):
                o[t, q] = o[t, q] + e[t, q]
    return out


def sample_inverse_cdf(cum_a, cum_xr, cum_xi, cos_phi, sin_phi, u):
    cdef const double[::1] ca = np.ascontiguousarray(cum_a, dtype=np.float64)
    cdef const double[::1] cr = np.ascontiguousarray(cum_xr, dtype=np.float64)
    cdef const double[::1] ci = np.ascontiguousarray(cum_xi, dtype=np.float64)
    cdef const double[::1] cph = np.ascontiguousarray(cos_phi, dtype=np.float64)
    cdef const double[::1] sph = np.ascontiguousarray(sin_phi, dtype=np.float64)
    cdef const double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t runs = cph.shape[0]
    cdef Py_ssize_t last = ca.shape[0] - 1
    out = np.empty(runs, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef Py_ssize_t r, lo, hi, mid
    cdef double c, s, target, val
    with nogil:
        for r in range(runs):
            c = cph[r]
            s = sph[r]
            target = uu[r] * (ca[last] + 2.0 * (c * cr[last] + s * ci[last]))
            lo = 0
            hi = last
            while lo < hi:
                mid = (lo + hi) >> 1
                val = ca[mid] + 2.0 * (c * cr[mid] + s * ci[mid])
                if val > target:
                    hi = mid
                else:
                    lo = mid + 1
            o[r] = lo
    return out
