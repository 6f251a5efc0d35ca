"""Time the compiled finite-field kernels against the pure-Python ones.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import random
import timeit

from codedshuffle import kernels
from codedshuffle.ff_poly import DEFAULT_PRIME

P = DEFAULT_PRIME


def cases(rng):
    xs = rng.sample(range(P), 600)
    ys = [rng.randrange(P) for _ in xs]
    coeffs = [rng.randrange(P) for _ in range(600)]
    zs = [rng.randrange(P) for _ in range(600)]
    data = list(range(200))
    code = list(range(200, 800))
    G = kernels.lagrange_matrix(data, code, P, backend="python")
    A = [[rng.randrange(P) for _ in range(8)] for _ in range(200)]
    exps = [[rng.randrange(4) for _ in range(3)] for _ in range(20)]
    tcoeffs = [rng.randrange(P) for _ in range(20)]
    points = [[rng.randrange(P) for _ in range(3)] for _ in range(2000)]
    return {
        "batch_inverse n=600": (kernels.batch_inverse, (ys, P)),
        "interpolate n=600": (kernels.interpolate, (xs, ys, P)),
        "horner_many deg=599 x600": (kernels.horner_many, (coeffs, zs, P)),
        "lagrange_matrix 600x200": (kernels.lagrange_matrix, (data, code, P)),
        "matmul_mod 600x200x8": (kernels.matmul_mod, (G, A, P)),
        "eval_terms_many 20 terms x2000": (kernels.eval_terms_many, (tcoeffs, exps, points, P)),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not kernels.has_compiled():
        raise SystemExit("compiled extension not built; run pip install -e . first")
    rng = random.Random(0)
    print(f"{'kernel':34s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}")
    for name, (fn, fargs) in cases(rng).items():
        assert fn(*fargs, backend="python") == fn(*fargs, backend="cython")
        t_py = min(timeit.repeat(lambda: fn(*fargs, backend="python"), number=1,
                                 repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: fn(*fargs, backend="cython"), number=1,
                                 repeat=args.repeat))
        print(f"{name:34s} {t_py:10.4f} {t_cy:10.4f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
