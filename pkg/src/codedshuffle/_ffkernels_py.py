"""Pure-Python GF(p) kernels, same contract as the compiled ``_ffkernels``.

Works for any prime modulus (no word-size cap). Inputs are sequences of
ints already reduced mod p; outputs are lists of ints.
"""


def batch_inverse(vals, p):
    n = len(vals)
    prefix = [0] * n
    acc = 1
    for i, v in enumerate(vals):
        prefix[i] = acc
        acc = acc * v % p
    inv = pow(acc, p - 2, p)
    out = [0] * n
    for i in range(n - 1, -1, -1):
        out[i] = inv * prefix[i] % p
        inv = inv * vals[i] % p
    return out


def _master(xs, p):
    coeffs = [1]
    for x in xs:
        neg = -x % p
        nxt = [0] * (len(coeffs) + 1)
        for k, c in enumerate(coeffs):
            nxt[k] = (nxt[k] + neg * c) % p
            nxt[k + 1] = (nxt[k + 1] + c) % p
        coeffs = nxt
    return coeffs


def _deflate(master, x, p):
    # master / (z - x) by synthetic division; exact when x is a root
    n = len(master) - 1
    q = [0] * n
    q[n - 1] = master[n]
    for k in range(n - 1, 0, -1):
        q[k - 1] = (master[k] + x * q[k]) % p
    return q


def _horner(coeffs, z, p):
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * z + c) % p
    return acc


def interpolate(xs, ys, p):
    n = len(xs)
    master = _master(xs, p)
    quots = [_deflate(master, x, p) for x in xs]
    inv = batch_inverse([_horner(q, x, p) for q, x in zip(quots, xs)], p)
    out = [0] * n
    for q, y, w in zip(quots, ys, inv):
        scale = y * w % p
        if scale:
            for k in range(n):
                out[k] = (out[k] + scale * q[k]) % p
    return out


def horner_many(coeffs, zs, p):
    return [_horner(coeffs, z, p) for z in zs]


def lagrange_matrix(data_nodes, code_nodes, p):
    m = len(data_nodes)
    master = _master(data_nodes, p)
    winv = batch_inverse(
        [_horner(_deflate(master, x, p), x, p) for x in data_nodes], p
    )
    position = {x: i for i, x in enumerate(data_nodes)}
    rows = []
    for z in code_nodes:
        if z in position:
            row = [0] * m
            row[position[z]] = 1
            rows.append(row)
            continue
        mz = _horner(master, z, p)
        dinv = batch_inverse([(z - x) % p for x in data_nodes], p)
        rows.append([mz * w % p * d % p for w, d in zip(winv, dinv)])
    return rows


def matmul_mod(G, A, p):
    cols = len(A[0]) if A else 0
    out = []
    for grow in G:
        acc = [0] * cols
        for g, arow in zip(grow, A):
            if g:
                for j in range(cols):
                    acc[j] += g * arow[j]
        out.append([a % p for a in acc])
    return out


def eval_terms_many(coeffs, exps, points, p):
    out = []
    for x in points:
        acc = 0
        for c, e in zip(coeffs, exps):
            term = c
            for xi, ei in zip(x, e):
                if ei:
                    term = term * pow(xi, ei, p) % p
            acc += term
        out.append(acc % p)
    return out
