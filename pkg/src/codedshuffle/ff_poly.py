"""Prime-field arithmetic and polynomials over GF(p).

Field elements are plain Python ints in ``[0, p)``; the modulus travels with
the :class:`PrimeField` (or the polynomial) that uses it. Data points are
tuples of field elements.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Iterable, Sequence

from . import kernels
from .errors import DegenerateNodes, DivisionByZero, ShapeError

DEFAULT_PRIME = 2**31 - 1

FieldElement = int
DataPoint = tuple


@dataclass(frozen=True)
class PrimeField:
    p: int = DEFAULT_PRIME

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"modulus must be a prime >= 2, got {self.p}")

    def __call__(self, x: int) -> int:
        return x % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def neg(self, a):
        return -a % self.p

    def mul(self, a, b):
        return a * b % self.p

    def inv(self, a):
        return field_inverse(a, self.p)

    def div(self, a, b):
        return a * field_inverse(b, self.p) % self.p

    def random_element(self, rng: random.Random) -> int:
        return rng.randrange(self.p)


def field_inverse(x: int, p: int = DEFAULT_PRIME) -> int:
    """Multiplicative inverse of ``x`` modulo the prime ``p``."""
    x %= p
    if x == 0:
        raise DivisionByZero("0 has no inverse in GF(p)")
    return pow(x, -1, p)


@dataclass(frozen=True)
class MultivariatePolynomial:
    """Sparse polynomial in ``nvars`` variables over GF(p).

    ``terms`` is kept canonical: exponent vectors are unique, sorted, and
    carry nonzero coefficients. Build instances through :meth:`from_terms`.
    """

    nvars: int
    terms: tuple  # ((exponents, coeff), ...)
    p: int = DEFAULT_PRIME

    @classmethod
    def from_terms(cls, terms: Iterable, nvars: int, p: int = DEFAULT_PRIME):
        merged: dict[tuple, int] = {}
        for coeff, exps in terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise ShapeError(f"exponent vector {exps} does not have {nvars} entries")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            merged[exps] = (merged.get(exps, 0) + coeff) % p
        canon = tuple(sorted((e, c) for e, c in merged.items() if c))
        return cls(nvars=nvars, terms=canon, p=p)

    @classmethod
    def random(cls, rng: random.Random, nvars: int, degree: int, p: int = DEFAULT_PRIME,
               density: float = 1.0):
        """Random polynomial of exact total degree ``degree``.

        Every monomial of degree <= ``degree`` is kept with probability
        ``density``; one top-degree monomial always gets a nonzero coefficient.
        """
        terms = []
        for deg in range(degree + 1):
            for combo in combinations_with_replacement(range(nvars), deg):
                if rng.random() < density:
                    exps = [0] * nvars
                    for i in combo:
                        exps[i] += 1
                    terms.append((rng.randrange(p), exps))
        top = [0] * nvars
        top[rng.randrange(nvars)] = degree
        terms.append((rng.randrange(1, p), top))
        poly = cls.from_terms(terms, nvars, p)
        if poly.degree != degree:  # cancelled the forced term; retry
            return cls.random(rng, nvars, degree, p, density)
        return poly

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, x: Sequence[int]) -> int:
        return poly_eval(self, x)


def poly_eval(f: MultivariatePolynomial, x: Sequence[int]) -> int:
    if len(x) != f.nvars:
        raise ShapeError(f"point has {len(x)} coordinates, polynomial expects {f.nvars}")
    p = f.p
    acc = 0
    for exps, coeff in f.terms:
        term = coeff
        for xi, e in zip(x, exps):
            if e:
                term = term * pow(xi, e, p) % p
        acc += term
    return acc % p


def poly_eval_many(f: MultivariatePolynomial, points: Sequence[Sequence[int]]) -> list[int]:
    """Vectorised :func:`poly_eval` through the kernel backend."""
    for x in points:
        if len(x) != f.nvars:
            raise ShapeError(f"point has {len(x)} coordinates, polynomial expects {f.nvars}")
    if not f.terms:
        return [0] * len(points)
    coeffs = [c for _, c in f.terms]
    exps = [list(e) for e, _ in f.terms]
    return kernels.eval_terms_many(coeffs, exps, [list(x) for x in points], f.p)


@dataclass(frozen=True)
class UnivariatePolynomial:
    coeffs: tuple = field(default=())  # low-to-high
    p: int = DEFAULT_PRIME

    def __post_init__(self):
        c = [x % self.p for x in self.coeffs]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        # -1 for the zero polynomial
        return len(self.coeffs) - 1

    def __call__(self, z: int) -> int:
        return eval_univariate(self, z)


def eval_univariate(g: UnivariatePolynomial, z: int) -> int:
    acc = 0
    for c in reversed(g.coeffs):
        acc = (acc * z + c) % g.p
    return acc


def eval_univariate_many(g: UnivariatePolynomial, zs: Sequence[int]) -> list[int]:
    return kernels.horner_many(list(g.coeffs), [z % g.p for z in zs], g.p)


def check_distinct(xs: Sequence[int], p: int) -> None:
    seen = set()
    for x in xs:
        r = x % p
        if r in seen:
            raise DegenerateNodes(f"duplicate evaluation node {r}")
        seen.add(r)


def interpolate(points: Sequence[tuple[int, int]], p: int = DEFAULT_PRIME) -> UnivariatePolynomial:
    """Unique polynomial of degree < len(points) through ``points``."""
    if not points:
        raise ValueError("need at least one point")
    xs = [x % p for x, _ in points]
    ys = [y % p for _, y in points]
    check_distinct(xs, p)
    return UnivariatePolynomial(tuple(kernels.interpolate(xs, ys, p)), p)
