# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_fallback.py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, uint8_t
from libc.math cimport log2

cnp.import_array()

BACKEND = "cython"

cdef uint64_t _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t _M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t _M2 = 0x94D049BB133111EBULL
cdef double _INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = z + _GOLDEN
    z = (z ^ (z >> 30)) * _M1
    z = (z ^ (z >> 27)) * _M2
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t key, uint64_t i) nogil:
    return <double>(_mix(key ^ i) >> 11) * _INV53


def mix64(z):
    return int(_mix(<uint64_t>(z & 0xFFFFFFFFFFFFFFFF)))


def stream_key(seed, step):
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t t = <uint64_t>(step & 0xFFFFFFFFFFFFFFFF)
    return int(_mix(_mix(s) ^ t))


def uniforms(key, index):
    cdef uint64_t k = <uint64_t>key
    cdef cnp.uint64_t[::1] idx = np.ascontiguousarray(index, dtype=np.uint64)
    cdef Py_ssize_t n = idx.shape[0], j
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for j in range(n):
            o[j] = _uniform(k, idx[j])
    return out


def cascade_step(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                 const cnp.int64_t[::1] d_in, double[::1] p, uint8_t[::1] failed,
                 const cnp.int64_t[::1] newly, double k_step, double r_step, key):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t j, e, u, i, cnt = 0
    cdef uint64_t k = <uint64_t>key
    cdef double x, denom = 1.0 + r_step
    m_arr = np.zeros(n, dtype=np.int64)
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] m = m_arr
    cdef cnp.int64_t[::1] out = out_arr
    with nogil:
        for j in range(newly.shape[0]):
            u = newly[j]
            for e in range(indptr[u], indptr[u + 1]):
                m[indices[e]] += 1
        for i in range(n):
            x = 0.0
            if m[i] > 0:
                x = (<double>m[i] * k_step) / <double>d_in[i]
            p[i] = x + p[i] * (1.0 - x) / denom
            if failed[i] == 0 and p[i] > 0.0:
                if _uniform(k, <uint64_t>i) < p[i]:
                    failed[i] = 1
                    out[cnt] = i
                    cnt += 1
    return out_arr[:cnt].copy()


def cmi_rows(a, b, c, Py_ssize_t na, Py_ssize_t nb, Py_ssize_t nc):
    cdef const cnp.int64_t[:, ::1] A = np.ascontiguousarray(a, dtype=np.int64)
    cdef const cnp.int64_t[:, ::1] B = np.ascontiguousarray(b, dtype=np.int64)
    cdef const cnp.int64_t[:, ::1] C = np.ascontiguousarray(c, dtype=np.int64)
    cdef Py_ssize_t rows = A.shape[0], n = A.shape[1]
    cdef Py_ssize_t r, j, v_abc, v_c, v_ac, v_bc
    out = np.zeros(rows, dtype=np.float64)
    cdef double[::1] o = out
    table_arr = np.zeros(n + 1, dtype=np.float64)
    cdef double[::1] table = table_arr
    for j in range(1, n + 1):
        table[j] = j * log2(<double>j)
    cdef cnp.int64_t[::1] c_abc = np.zeros(na * nb * nc, dtype=np.int64)
    cdef cnp.int64_t[::1] c_c = np.zeros(nc, dtype=np.int64)
    cdef cnp.int64_t[::1] c_ac = np.zeros(na * nc, dtype=np.int64)
    cdef cnp.int64_t[::1] c_bc = np.zeros(nb * nc, dtype=np.int64)
    cdef double s_abc, s_c, s_ac, s_bc
    if n == 0:
        return out
    with nogil:
        for r in range(rows):
            for j in range(n):
                v_ac = C[r, j] * na + A[r, j]
                c_abc[v_ac * nb + B[r, j]] += 1
                c_c[C[r, j]] += 1
                c_ac[v_ac] += 1
                c_bc[C[r, j] * nb + B[r, j]] += 1
            s_abc = 0.0
            s_c = 0.0
            s_ac = 0.0
            s_bc = 0.0
            for j in range(n):
                v_c = C[r, j]
                v_ac = v_c * na + A[r, j]
                v_abc = v_ac * nb + B[r, j]
                v_bc = v_c * nb + B[r, j]
                if c_abc[v_abc] > 0:
                    s_abc = s_abc + table[c_abc[v_abc]]
                    c_abc[v_abc] = 0
                if c_c[v_c] > 0:
                    s_c = s_c + table[c_c[v_c]]
                    c_c[v_c] = 0
                if c_ac[v_ac] > 0:
                    s_ac = s_ac + table[c_ac[v_ac]]
                    c_ac[v_ac] = 0
                if c_bc[v_bc] > 0:
                    s_bc = s_bc + table[c_bc[v_bc]]
                    c_bc[v_bc] = 0
            o[r] = (s_abc + s_c - s_ac - s_bc) / n
    return out
