"""Backend selection for the finite-field kernels.

The compiled extension is used when it imported cleanly and the modulus is
below 2**32 (so products of reduced values fit in a uint64). Everything else
goes through the pure-Python implementation. Callers always get plain
Python ints back.
"""
import numpy as np

from . import _ffkernels_py as _py

try:
    from . import _ffkernels as _c
except ImportError:  # extension not built
    _c = None

BACKEND = "cython" if _c is not None else "python"
COMPILED_MAX_MODULUS = 2**32


def has_compiled():
    return _c is not None


def _use_compiled(p, force):
    if force == "python":
        return False
    if force == "cython":
        if _c is None:
            raise RuntimeError("compiled kernels are not available")
        if p >= COMPILED_MAX_MODULUS:
            raise ValueError(f"compiled kernels need p < 2**32, got {p}")
        return True
    return _c is not None and p < COMPILED_MAX_MODULUS


def _vec(values):
    return np.ascontiguousarray(np.asarray(values, dtype=np.uint64).reshape(-1))


def _mat(rows, ncols):
    arr = np.asarray(rows, dtype=np.uint64)
    return np.ascontiguousarray(arr.reshape(-1, ncols))


def _ints(arr):
    return [int(v) for v in arr]


def batch_inverse(vals, p, backend=None):
    if _use_compiled(p, backend):
        return _ints(_c.batch_inverse(_vec(vals), p))
    return _py.batch_inverse(list(vals), p)


def interpolate(xs, ys, p, backend=None):
    if _use_compiled(p, backend):
        return _ints(_c.interpolate(_vec(xs), _vec(ys), p))
    return _py.interpolate(list(xs), list(ys), p)


def horner_many(coeffs, zs, p, backend=None):
    if not coeffs:
        return [0] * len(zs)
    if _use_compiled(p, backend):
        return _ints(_c.horner_many(_vec(coeffs), _vec(zs), p))
    return _py.horner_many(list(coeffs), list(zs), p)


def lagrange_matrix(data_nodes, code_nodes, p, backend=None):
    if _use_compiled(p, backend):
        G = _c.lagrange_matrix(_vec(data_nodes), _vec(code_nodes), p)
        return [_ints(row) for row in G]
    return _py.lagrange_matrix(list(data_nodes), list(code_nodes), p)


def matmul_mod(G, A, p, backend=None):
    if not G:
        return []
    if _use_compiled(p, backend):
        out = _c.matmul_mod(_mat(G, len(G[0])), _mat(A, len(A[0])), p)
        return [_ints(row) for row in out]
    return _py.matmul_mod(G, A, p)


def eval_terms_many(coeffs, exps, points, p, backend=None):
    if not coeffs:
        return [0] * len(points)
    v = len(exps[0])
    if v == 0:
        return [sum(coeffs) % p] * len(points)
    if _use_compiled(p, backend):
        out = _c.eval_terms_many(_vec(coeffs), _mat(exps, v), _mat(points, v), p)
        return _ints(out)
    return _py.eval_terms_many(coeffs, exps, points, p)
