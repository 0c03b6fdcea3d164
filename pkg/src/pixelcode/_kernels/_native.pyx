# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched port-current solver.

Same contract as ``numpy_backend.batch_port_currents``; one LAPACK zgesv
call per candidate on the reduced on-switch subsystem, with the Python
interpreter released for the whole batch.
"""

import numpy as np

from libc.math cimport isfinite
from scipy.linalg.cython_lapack cimport zgesv


def batch_port_currents(z_pp, z_pa, bits):
    zpp_arr = np.ascontiguousarray(z_pp, dtype=np.complex128)
    zpa_arr = np.ascontiguousarray(z_pa, dtype=np.complex128)
    bits_arr = np.ascontiguousarray(bits, dtype=np.uint8)

    cdef Py_ssize_t n = bits_arr.shape[0]
    cdef Py_ssize_t q = bits_arr.shape[1]

    currents = np.zeros((n, q + 1), dtype=np.complex128)
    currents[:, 0] = 1.0
    ok = np.ones(n, dtype=np.uint8)
    if n == 0 or q == 0:
        return currents, ok.astype(bool)

    cdef const double complex[:, ::1] zpp = zpp_arr
    cdef const double complex[::1] zpa = zpa_arr
    cdef const unsigned char[:, ::1] bv = bits_arr
    cdef double complex[:, ::1] out = currents
    cdef unsigned char[::1] okv = ok

    cdef double complex[::1] a = np.empty(q * q, dtype=np.complex128)
    cdef double complex[::1] rhs = np.empty(q, dtype=np.complex128)
    cdef int[::1] ipiv = np.empty(q, dtype=np.int32)
    cdef Py_ssize_t[::1] on = np.empty(q, dtype=np.intp)

    cdef Py_ssize_t r, k, i, j, m
    cdef int mi, nrhs, info
    cdef bint finite

    with nogil:
        for r in range(n):
            m = 0
            for k in range(q):
                if bv[r, k] == 0:
                    on[m] = k
                    m += 1
            if m == 0:
                continue
            # pack the on-subsystem column-major with lda = m
            for j in range(m):
                for i in range(m):
                    a[i + j * m] = zpp[on[i], on[j]]
                rhs[j] = -zpa[on[j]]
            mi = <int> m
            nrhs = 1
            info = 0
            zgesv(&mi, &nrhs, &a[0], &mi, &ipiv[0], &rhs[0], &mi, &info)
            if info != 0:
                okv[r] = 0
                continue
            finite = True
            for i in range(m):
                if not (isfinite(rhs[i].real) and isfinite(rhs[i].imag)):
                    finite = False
                    break
            if not finite:
                okv[r] = 0
                continue
            for i in range(m):
                out[r, on[i] + 1] = rhs[i]

    return currents, ok.astype(bool)
