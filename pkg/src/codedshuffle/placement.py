"""Repetition-layer placement and the combinatorics built on it.

The r1*m Lagrange-coded rows are cut into C(K, r2) batches of b rows, batch
``i`` going to the ``i``-th r2-subset of devices in lexicographic order.
Devices and rows are 0-indexed.

Analytic callers may pass a fractional ``b`` (a continuous relaxation for
large m); every count below is then an exact ``Fraction``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from functools import lru_cache

from .config import as_fraction
from .errors import InfeasibleBatching, InfeasibleShuffle, ResourceLimit

BRUTEFORCE_MAX_K = 20


def binom(n: int, k: int) -> int:
    """C(n, k) with C(n, k) = 0 whenever k < 0 or n < k."""
    if k < 0 or n < k or n < 0:
        return 0
    return math.comb(n, k)


@dataclass(frozen=True)
class PlacementMap:
    K: int
    r2: int
    b: int
    batches: tuple  # ((device subset), range of rows), lexicographic
    per_device: tuple  # device -> frozenset of rows
    row_holders: tuple  # row -> frozenset of devices

    @property
    def m_prime(self) -> int:
        return len(self.row_holders)


def assign_batches(K: int, r2: int, b: int, m_prime: int) -> PlacementMap:
    if not 1 <= r2 <= K:
        raise InfeasibleBatching(f"r2={r2} outside [1, K={K}]")
    if b < 1 or m_prime != b * math.comb(K, r2):
        raise InfeasibleBatching(
            f"m'={m_prime} is not b*C({K},{r2}) = {b}*{math.comb(K, r2)}")
    batches = []
    stored = [set() for _ in range(K)]
    holders = []
    for i, subset in enumerate(combinations(range(K), r2)):
        rows = range(i * b, (i + 1) * b)
        batches.append((subset, rows))
        for k in subset:
            stored[k].update(rows)
        holders.extend(frozenset(subset) for _ in rows)
    return PlacementMap(K=K, r2=r2, b=b, batches=tuple(batches),
                        per_device=tuple(frozenset(s) for s in stored),
                        row_holders=tuple(holders))


def stored_per_device(K: int, r2: int, b) -> Fraction:
    return as_fraction(b) * binom(K - 1, r2 - 1)


def feasibility(K: int, q: int, m: int, d: int, r1, r2: int) -> bool:
    """Whether every set of q surviving devices can decode every output."""
    r1 = as_fraction(r1)
    if r1 == 1:
        return r2 > K - q
    m_star = (m - 1) * d + 1
    if r1 * m < m_star:
        return False
    total = binom(K, r2)
    return total - binom(K - q, r2) >= Fraction(m_star) / (r1 * m) * total


def q_min(K: int, mu, m: int, d: int) -> int:
    mu = as_fraction(mu)
    by_threshold = math.ceil(Fraction((m - 1) * d + 1) / (mu * m))
    by_repetition = K - math.floor(mu * K) + 1
    return min(by_threshold, by_repetition)


@dataclass(frozen=True)
class MultiplicityProfile:
    """How many missing IVs per output sit at each multiplicity.

    ``counts[j] = batch * weights[j]`` where ``weights[j]`` is the integer
    number of batches at multiplicity j. Groups ``s_max`` down to ``s_q`` are
    shuffled in full; ``remainder`` more IVs come from group ``s_q - 1``. An
    empty profile (``need == 0``) means the device already holds enough IVs.
    """

    s_min: int
    s_max: int
    batch: Fraction
    weights: tuple  # weights[i] is the batch count at multiplicity s_min + i
    s_q: int
    remainder: Fraction
    need: Fraction

    @property
    def counts(self) -> dict:
        return {self.s_min + i: self.batch * w for i, w in enumerate(self.weights)}

    def weight(self, j: int) -> int:
        i = j - self.s_min
        return self.weights[i] if 0 <= i < len(self.weights) else 0

    @property
    def empty(self) -> bool:
        return self.need == 0

    def exchanged(self):
        """(multiplicity, IVs per output) pairs actually shuffled, high to low."""
        out = [(j, self.batch * self.weight(j)) for j in range(self.s_max, self.s_q - 1, -1)
               if self.weight(j)]
        if self.remainder:
            out.append((self.s_q - 1, self.remainder))
        return out


@lru_cache(maxsize=4096)
def _weights(K, q, r2):
    s_min = max(r2 - (K - q), 0)
    s_max = min(q - 1, r2)
    return s_min, s_max, tuple(binom(q - 1, j) * binom(K - q, r2 - j)
                               for j in range(s_min, s_max + 1))


@lru_cache(maxsize=65536)
def _profile(K, q, r2, b, m_star, stored):
    s_min, s_max, weights = _weights(K, q, r2)
    need = m_star - stored
    if need <= 0:
        return MultiplicityProfile(s_min, s_max, b, weights, s_max + 1, Fraction(0), Fraction(0))
    lowest = max(s_min, 1)  # multiplicity-0 IVs live only at stragglers
    # compare whole batches: b * tail <= need  <=>  tail <= need / b
    limit = need / b
    reachable = sum(weights[lowest - s_min:])
    if reachable < limit:
        raise InfeasibleShuffle(f"need {need} IVs per output, only {b * reachable} reachable")
    tail = 0
    s_q = s_max + 1
    for s in range(s_max, lowest - 1, -1):
        w = weights[s - s_min]
        if tail + w > limit:
            break
        tail += w
        s_q = s
    remainder = need - b * tail
    assert remainder == 0 or s_q - 1 >= lowest
    return MultiplicityProfile(s_min, s_max, b, weights, s_q, remainder, need)


def multiplicity_profile(K: int, q: int, r2: int, b, m_star: int, stored=None) -> MultiplicityProfile:
    b = as_fraction(b)
    if stored is None:
        stored = stored_per_device(K, r2, b)
    return _profile(K, q, r2, b, m_star, as_fraction(stored))


def coverage_check_bruteforce(placement: PlacementMap, q: int, m_star: int,
                              uncoded: bool = False) -> bool:
    """Enumerate every straggler set of size K - q and test decodability.

    With ``uncoded`` (r1 = 1) the survivors must hold every row; otherwise
    they must jointly hold at least ``m_star`` distinct rows.
    """
    K = placement.K
    if K > BRUTEFORCE_MAX_K:
        raise ResourceLimit(f"K={K} exceeds the enumeration guard of {BRUTEFORCE_MAX_K}")
    target = placement.m_prime if uncoded else m_star
    for stragglers in combinations(range(K), K - q):
        lost = set(stragglers)
        held = set()
        for k in range(K):
            if k not in lost:
                held |= placement.per_device[k]
        if len(held) < target:
            return False
    return True
