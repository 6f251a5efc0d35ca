"""Lagrange encoding of the dataset and decoding of polynomial outputs.

Rows are encoded as evaluations of the degree-(m-1) interpolant ``u`` through
``(beta_i, a_i)`` at fresh nodes ``theta_j``. Applying a degree-d polynomial
``f`` row-wise gives evaluations of ``g = f(u)``, a univariate polynomial of
degree (m-1)d, so any ``(m-1)d + 1`` of them determine ``f(a_i) = g(beta_i)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

from . import kernels
from .config import as_fraction
from .errors import (DegenerateNodes, InfeasibleBatching, InfeasibleConfig,
                     InsufficientIVs, ShapeError)
from .ff_poly import DEFAULT_PRIME, check_distinct, eval_univariate_many, interpolate


def recovery_threshold(m: int, d: int, r1) -> int:
    """Number of IVs needed to decode all m outputs of one degree-d function."""
    if m < 1 or d < 1:
        raise ValueError(f"m and d must be positive, got m={m}, d={d}")
    d_prime = 1 if as_fraction(r1) == 1 else d
    return (m - 1) * d_prime + 1


@dataclass(frozen=True)
class CodeParams:
    """Concrete concatenated-code description.

    ``code_nodes`` has one entry per Lagrange-coded row. When it is a
    permutation of ``data_nodes`` the code is the identity (``build`` does this
    for r1 = 1); fresh nodes give a genuine Lagrange code. ``K``, ``r2``
    and ``b`` describe the repetition layer and are optional for callers that
    only need the Lagrange part.
    """

    m: int
    d: int
    data_nodes: tuple
    code_nodes: tuple
    p: int = DEFAULT_PRIME
    r2: int = 1
    K: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "data_nodes", tuple(x % self.p for x in self.data_nodes))
        object.__setattr__(self, "code_nodes", tuple(x % self.p for x in self.code_nodes))
        if len(self.data_nodes) != self.m:
            raise ShapeError(f"{len(self.data_nodes)} data nodes for m={self.m}")
        if len(self.code_nodes) < self.m:
            raise ShapeError("fewer code nodes than data rows")
        check_distinct(self.data_nodes, self.p)
        check_distinct(self.code_nodes, self.p)
        if not self.uncoded:
            if set(self.code_nodes) & set(self.data_nodes):
                raise DegenerateNodes("code nodes overlap data nodes")
            if self.m_prime < self.m_star:
                raise InfeasibleConfig(
                    f"r1*m = {self.m_prime} coded rows < recovery threshold {self.m_star}")
        if self.K is not None:
            if not 1 <= self.r2 <= self.K:
                raise InfeasibleBatching(f"r2={self.r2} outside [1, K={self.K}]")
            if self.m_prime % comb(self.K, self.r2):
                raise InfeasibleBatching(
                    f"{self.m_prime} coded rows do not split into C({self.K},{self.r2}) batches")

    @classmethod
    def build(cls, m: int, d: int, r1, K: int | None = None, r2: int = 1,
              p: int = DEFAULT_PRIME) -> "CodeParams":
        """Canonical nodes: beta_i = i and theta_j = m + j (0-based)."""
        r1 = as_fraction(r1)
        if r1 < 1:
            raise InfeasibleConfig(f"r1={r1} < 1")
        m_prime = r1 * m
        if m_prime.denominator != 1:
            raise InfeasibleBatching(f"r1*m = {m_prime} is not an integer")
        m_prime = int(m_prime)
        data = tuple(range(m))
        code = data if r1 == 1 else tuple(range(m, m + m_prime))
        if max(code + data) >= p:
            raise InfeasibleConfig(f"prime {p} too small for {m + m_prime} distinct nodes")
        return cls(m=m, d=d, data_nodes=data, code_nodes=code, p=p, r2=r2, K=K)

    @property
    def uncoded(self) -> bool:
        """Identity code: the coded rows are the data rows themselves."""
        return set(self.code_nodes) == set(self.data_nodes)

    @property
    def m_prime(self) -> int:
        return len(self.code_nodes)

    @property
    def r1(self) -> Fraction:
        return Fraction(self.m_prime, self.m)

    @property
    def b(self) -> int:
        """Batch size; requires ``K``."""
        if self.K is None:
            raise ValueError("batch size needs K")
        return self.m_prime // comb(self.K, self.r2)

    @property
    def d_prime(self) -> int:
        return 1 if self.uncoded else self.d

    @property
    def m_star(self) -> int:
        return (self.m - 1) * self.d_prime + 1


@dataclass(frozen=True)
class CodedDataset:
    rows: tuple
    params: CodeParams


@dataclass(frozen=True, order=True)
class IntermediateValue:
    function_id: int
    code_node: int
    value: int


def generator_matrix(params: CodeParams) -> list[list[int]]:
    """m' x m matrix with G[j][i] = l_i(theta_j)."""
    return kernels.lagrange_matrix(params.data_nodes, params.code_nodes, params.p)


def _check_rows(data: Sequence[Sequence[int]], m: int) -> int:
    if len(data) != m:
        raise ShapeError(f"expected {m} data rows, got {len(data)}")
    widths = {len(row) for row in data}
    if len(widths) != 1:
        raise ShapeError(f"data rows have mixed lengths {sorted(widths)}")
    return widths.pop()


def encode(data: Sequence[Sequence[int]], params: CodeParams) -> CodedDataset:
    _check_rows(data, params.m)
    p = params.p
    A = [[x % p for x in row] for row in data]
    if params.uncoded:
        by_node = dict(zip(params.data_nodes, A))
        rows = [by_node[x] for x in params.code_nodes]
    else:
        rows = kernels.matmul_mod(generator_matrix(params), A, p)
    return CodedDataset(rows=tuple(tuple(r) for r in rows), params=params)


def decode_outputs(f_degree: int, ivs: Iterable[IntermediateValue],
                   params: CodeParams) -> list[int]:
    """Recover ``(f(a_1), ..., f(a_m))`` from IVs of one function.

    Uses the first ``m_star`` IVs in ascending node order; extras are ignored.
    """
    ivs = sorted(ivs, key=lambda iv: iv.code_node)
    if len({iv.function_id for iv in ivs}) > 1:
        raise ValueError("IVs from more than one function")
    nodes = [iv.code_node for iv in ivs]
    check_distinct(nodes, params.p)
    m_star = (params.m - 1) * (1 if params.uncoded else f_degree) + 1

    if params.uncoded:
        by_node = {iv.code_node: iv.value for iv in ivs}
        missing = [x for x in params.data_nodes if x not in by_node]
        if missing:
            raise InsufficientIVs(f"uncoded outputs missing for data nodes {missing[:5]}")
        return [by_node[x] for x in params.data_nodes]

    if len(ivs) < m_star:
        raise InsufficientIVs(f"{len(ivs)} IVs supplied, recovery threshold is {m_star}")
    use = ivs[:m_star]
    g = interpolate([(iv.code_node, iv.value) for iv in use], params.p)
    return eval_univariate_many(g, params.data_nodes)
