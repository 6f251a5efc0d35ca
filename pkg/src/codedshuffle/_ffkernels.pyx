# cython: language_level=3
"""Compiled GF(p) kernels for moduli below 2**32.

All inputs are uint64 arrays already reduced mod p; products of two reduced
values fit in 64 bits, which is why the modulus is capped. Node distinctness
is validated by the caller.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t

cnp.import_array()

ctypedef uint64_t u64


cdef inline u64 _powmod(u64 base, u64 exp, u64 p) nogil:
    cdef u64 result = 1
    base %= p
    while exp:
        if exp & 1:
            result = (result * base) % p
        base = (base * base) % p
        exp >>= 1
    return result


cdef inline u64 _sub(u64 a, u64 b, u64 p) nogil:
    return a - b if a >= b else a + p - b


cdef void _batch_inverse(u64[::1] vals, u64[::1] out, u64[::1] scratch, u64 p) nogil:
    cdef Py_ssize_t n = vals.shape[0], i
    cdef u64 acc = 1, inv
    for i in range(n):
        scratch[i] = acc
        acc = (acc * vals[i]) % p
    inv = _powmod(acc, p - 2, p)
    for i in range(n - 1, -1, -1):
        out[i] = (inv * scratch[i]) % p
        inv = (inv * vals[i]) % p


def batch_inverse(u64[::1] vals, u64 p):
    cdef Py_ssize_t n = vals.shape[0]
    out = np.empty(n, dtype=np.uint64)
    scratch = np.empty(n, dtype=np.uint64)
    cdef u64[::1] o = out, s = scratch
    with nogil:
        _batch_inverse(vals, o, s, p)
    return out


cdef void _master(u64[::1] xs, u64[::1] coeffs, u64 p) nogil:
    # coeffs has length n + 1; builds prod (z - x_i), low-to-high
    cdef Py_ssize_t n = xs.shape[0], i, k
    cdef u64 neg
    coeffs[0] = 1
    for k in range(1, n + 1):
        coeffs[k] = 0
    for i in range(n):
        neg = (p - xs[i]) % p
        for k in range(i + 1, 0, -1):
            coeffs[k] = (coeffs[k - 1] + neg * coeffs[k]) % p
        coeffs[0] = (neg * coeffs[0]) % p


def interpolate(u64[::1] xs, u64[::1] ys, u64 p):
    """Coefficients (low-to-high, length n) of the interpolant through (xs, ys)."""
    cdef Py_ssize_t n = xs.shape[0], i, k
    master_arr = np.empty(n + 1, dtype=np.uint64)
    quot_arr = np.empty(n, dtype=np.uint64)
    denom_arr = np.empty(n, dtype=np.uint64)
    out_arr = np.zeros(n, dtype=np.uint64)
    inv_arr = np.empty(n, dtype=np.uint64)
    scratch = np.empty(n, dtype=np.uint64)
    cdef u64[::1] M = master_arr, q = quot_arr, den = denom_arr, out = out_arr
    cdef u64[::1] inv = inv_arr, s = scratch
    cdef u64 x, acc, scale
    with nogil:
        _master(xs, M, p)
        # denominators: prod_{j != i} (x_i - x_j) = (M / (z - x_i))(x_i)
        for i in range(n):
            x = xs[i]
            q[n - 1] = M[n]
            for k in range(n - 1, 0, -1):
                q[k - 1] = (M[k] + x * q[k]) % p
            acc = 0
            for k in range(n - 1, -1, -1):
                acc = (acc * x + q[k]) % p
            den[i] = acc
        _batch_inverse(den, inv, s, p)
        for i in range(n):
            x = xs[i]
            scale = (ys[i] * inv[i]) % p
            if scale == 0:
                continue
            q[n - 1] = M[n]
            for k in range(n - 1, 0, -1):
                q[k - 1] = (M[k] + x * q[k]) % p
            for k in range(n):
                out[k] = (out[k] + scale * q[k]) % p
    return out_arr


def horner_many(u64[::1] coeffs, u64[::1] zs, u64 p):
    cdef Py_ssize_t n = coeffs.shape[0], t = zs.shape[0], i, k
    out_arr = np.zeros(t, dtype=np.uint64)
    cdef u64[::1] out = out_arr
    cdef u64 acc, z
    with nogil:
        for i in range(t):
            z = zs[i]
            acc = 0
            for k in range(n - 1, -1, -1):
                acc = (acc * z + coeffs[k]) % p
            out[i] = acc
    return out_arr


def lagrange_matrix(u64[::1] data_nodes, u64[::1] code_nodes, u64 p):
    """G[j, i] = l_i(code_nodes[j]) for the Lagrange basis on data_nodes."""
    cdef Py_ssize_t m = data_nodes.shape[0], mp = code_nodes.shape[0], i, j, k
    G_arr = np.zeros((mp, m), dtype=np.uint64)
    master_arr = np.empty(m + 1, dtype=np.uint64)
    quot_arr = np.empty(m, dtype=np.uint64)
    w_arr = np.empty(m, dtype=np.uint64)
    winv_arr = np.empty(m, dtype=np.uint64)
    diff_arr = np.empty(m, dtype=np.uint64)
    dinv_arr = np.empty(m, dtype=np.uint64)
    scratch = np.empty(m, dtype=np.uint64)
    cdef u64[:, ::1] G = G_arr
    cdef u64[::1] M = master_arr, q = quot_arr, w = w_arr, winv = winv_arr
    cdef u64[::1] diff = diff_arr, dinv = dinv_arr, s = scratch
    cdef u64 x, acc, mt, z
    cdef Py_ssize_t hit
    with nogil:
        _master(data_nodes, M, p)
        for i in range(m):
            x = data_nodes[i]
            q[m - 1] = M[m]
            for k in range(m - 1, 0, -1):
                q[k - 1] = (M[k] + x * q[k]) % p
            acc = 0
            for k in range(m - 1, -1, -1):
                acc = (acc * x + q[k]) % p
            w[i] = acc
        _batch_inverse(w, winv, s, p)
        for j in range(mp):
            z = code_nodes[j]
            hit = -1
            for i in range(m):
                if data_nodes[i] == z:
                    hit = i
                    break
            if hit >= 0:
                G[j, hit] = 1
                continue
            mt = 0
            for k in range(m, -1, -1):
                mt = (mt * z + M[k]) % p
            for i in range(m):
                diff[i] = _sub(z, data_nodes[i], p)
            _batch_inverse(diff, dinv, s, p)
            for i in range(m):
                G[j, i] = (((mt * winv[i]) % p) * dinv[i]) % p
    return G_arr


def matmul_mod(u64[:, ::1] G, u64[:, ::1] A, u64 p):
    cdef Py_ssize_t r = G.shape[0], inner = G.shape[1], c = A.shape[1], i, j, k
    out_arr = np.zeros((r, c), dtype=np.uint64)
    cdef u64[:, ::1] out = out_arr
    cdef u64 g
    with nogil:
        for i in range(r):
            for k in range(inner):
                g = G[i, k]
                if g == 0:
                    continue
                for j in range(c):
                    out[i, j] = (out[i, j] + g * A[k, j]) % p
    return out_arr


def eval_terms_many(u64[::1] coeffs, u64[:, ::1] exps, u64[:, ::1] points, u64 p):
    """Evaluate sum_t coeffs[t] * prod_i x_i**exps[t, i] at every row of points."""
    cdef Py_ssize_t T = coeffs.shape[0], v = exps.shape[1], n = points.shape[0]
    cdef Py_ssize_t r, t, i
    out_arr = np.zeros(n, dtype=np.uint64)
    cdef u64[::1] out = out_arr
    cdef u64 acc, term
    with nogil:
        for r in range(n):
            acc = 0
            for t in range(T):
                term = coeffs[t]
                for i in range(v):
                    if exps[t, i]:
                        term = (term * _powmod(points[r, i], exps[t, i], p)) % p
                acc = (acc + term) % p
            out[r] = acc
    return out_arr
