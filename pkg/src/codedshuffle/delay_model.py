"""Closed-form Map, Shuffle and total delays, and their optimisation.

All quantities are exact ``Fraction``s. A shuffle that needs a zero-rate
transmission (zero-forcing without CSI) has delay ``math.inf``, which
compares above every finite ``Fraction``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .config import SystemConfig, as_fraction
from .placement import binom, feasibility, multiplicity_profile, q_min, stored_per_device

INF = math.inf
ANALYTIC_GRID_POINTS = 64


class Scheme(enum.Enum):
    CM = "cm"  # coded multicasting
    ZF = "zf"  # one-shot cooperative zero-forcing
    SC = "sc"  # superposition of multicast on zero-forcing

    @classmethod
    def parse(cls, text: str) -> "Scheme":
        key = text.strip().lower()
        aliases = {"codedmulticasting": "cm", "zeroforcing": "zf", "superposition": "sc"}
        return cls(aliases.get(key, key))


class Mode(enum.Enum):
    ANALYTIC = "analytic"
    CONCRETE = "concrete"


@dataclass(frozen=True)
class DelayBreakdown:
    scheme: Scheme
    q: int
    map_delay: Fraction
    shuffle_delay: object  # Fraction or INF
    total_delay: object
    r1: Fraction | None
    r2: int | None

    @property
    def feasible(self) -> bool:
        return self.r2 is not None


def map_delay(mu, q: int, K: int) -> Fraction:
    """Expected q-th order statistic of shifted-exponential Map times."""
    if not 1 <= q <= K:
        raise ValueError(f"q={q} outside [1, K={K}]")
    mu = as_fraction(mu)
    harmonic_tail = sum((Fraction(1, j) for j in range(K - q + 1, K + 1)), Fraction(0))
    return mu / 2 * (1 + harmonic_tail)


@lru_cache(maxsize=4096)
def _scaled_gain(scheme: "Scheme", j: int, q: int, alpha: Fraction) -> int:
    # gain * alpha.denominator, an integer
    num, den = alpha.numerator, alpha.denominator
    if scheme is Scheme.CM:
        return j * den
    cooperative = num * min(q, 2 * j)
    if scheme is Scheme.ZF:
        return cooperative
    return (den - num) * j + cooperative


def gain(scheme: Scheme, j: int, q: int, alpha) -> Fraction:
    """IVs delivered per unit time by one group-j transmission."""
    alpha = as_fraction(alpha)
    return Fraction(_scaled_gain(scheme, j, q, alpha), alpha.denominator)


def shuffle_delay_fixed(scheme: Scheme, profile, m: int, q: int, alpha):
    """Shuffle delay for one fixed code (one multiplicity profile).

    Sum over shuffled groups of count_j / (m * gain_j). Full groups share the
    batch size, so their weights are summed over a common integer
    denominator before a single rational multiply.
    """
    alpha = as_fraction(alpha)
    num, den = 0, 1
    for j in range(profile.s_max, profile.s_q - 1, -1):
        w = profile.weight(j)
        if not w:
            continue
        g = _scaled_gain(scheme, j, q, alpha)
        if g == 0:
            return INF
        num, den = num * g + w * den, den * g
    # (batch * num/den + remainder/g_partial) * alpha.den / m, in integers
    b = profile.batch
    num, den = b.numerator * num, b.denominator * den
    rem = profile.remainder
    if rem:
        g = _scaled_gain(scheme, profile.s_q - 1, q, alpha)
        if g == 0:
            return INF
        rd = rem.denominator * g
        num, den = num * rd + rem.numerator * den, den * rd
    return Fraction(num * alpha.denominator, den * m)


def r1_candidates(config: SystemConfig, r2: int, mode: Mode) -> list[Fraction]:
    """Lagrange redundancies tried for a given repetition factor, ascending."""
    top = config.mu * config.K / r2
    out = [Fraction(1)]
    if top <= 1:
        return out
    if mode is Mode.CONCRETE:
        batches = binom(config.K, r2)
        b = config.m // batches + 1  # smallest b with r1 > 1
        while Fraction(batches * b, config.m) <= top:
            out.append(Fraction(batches * b, config.m))
            b += 1
        return out
    steps = ANALYTIC_GRID_POINTS + 1
    out.extend(1 + (top - 1) * Fraction(i, steps) for i in range(1, steps))
    out.append(top)
    return out


def pair_profile(config: SystemConfig, q: int, r1, r2: int, mode: Mode = Mode.ANALYTIC):
    """Multiplicity profile of (r1, r2) at q survivors, or None if infeasible."""
    r1 = as_fraction(r1)
    K, m = config.K, config.m
    if r1 < 1 or r1 * r2 > config.mu * K or not 1 <= r2 <= K:
        return None
    b = r1 * m / binom(K, r2)
    if mode is Mode.CONCRETE and (b.denominator != 1 or config.N % q):
        return None
    if not feasibility(K, q, m, config.d, r1, r2):
        return None
    m_star = m if r1 == 1 else (m - 1) * config.d + 1
    return multiplicity_profile(K, q, r2, b, m_star, stored_per_device(K, r2, b))


def feasible_pairs(config: SystemConfig, q: int, mode: Mode = Mode.ANALYTIC):
    """Yield (r1, r2, profile) over the candidate set, r2 then r1 ascending."""
    for r2 in range(1, config.max_r2 + 1):
        for r1 in r1_candidates(config, r2, mode):
            profile = pair_profile(config, q, r1, r2, mode)
            if profile is not None:
                yield r1, r2, profile


def min_shuffle_delay(scheme: Scheme, config: SystemConfig, q: int,
                      mode: Mode = Mode.ANALYTIC):
    """(delay, r1, r2) minimising the shuffle delay.

    Ties go to the smaller r1, then the smaller r2, so the uncoded placement
    is preferred whenever coding does not strictly help.
    """
    return min_shuffle_delays([scheme], config, q, mode)[scheme]


def min_shuffle_delays(schemes, config: SystemConfig, q: int, mode: Mode = Mode.ANALYTIC):
    best = {s: (INF, None, None) for s in schemes}
    for r1, r2, profile in feasible_pairs(config, q, mode):
        for s in schemes:
            delay = shuffle_delay_fixed(s, profile, config.m, q, config.alpha)
            cur, b1, b2 = best[s]
            if b1 is None or delay < cur or (delay == cur and (r1, r2) < (b1, b2)):
                best[s] = (delay, r1, r2)
    return best


def _breakdown(scheme, config, q, shuffle):
    delay, r1, r2 = shuffle
    dm = map_delay(config.mu, q, config.K)
    total = INF if delay == INF else config.gamma * dm + delay
    return DelayBreakdown(scheme, q, dm, delay, total, r1, r2)


def total_delay(scheme: Scheme, config: SystemConfig, q: int,
                mode: Mode = Mode.ANALYTIC) -> DelayBreakdown:
    return _breakdown(scheme, config, q, min_shuffle_delay(scheme, config, q, mode))


def total_delays(schemes, config: SystemConfig, q: int, mode: Mode = Mode.ANALYTIC):
    """:func:`total_delay` for several schemes sharing one pass over the codes."""
    shuffles = min_shuffle_delays(schemes, config, q, mode)
    return {s: _breakdown(s, config, q, shuffles[s]) for s in schemes}


def q_range(config: SystemConfig) -> range:
    return range(q_min(config.K, config.mu, config.m, config.d), config.K + 1)


def optimize_q(scheme: Scheme, config: SystemConfig, mode: Mode = Mode.ANALYTIC) -> DelayBreakdown:
    return optimize_q_all([scheme], config, mode)[scheme]


def optimize_q_all(schemes, config: SystemConfig, mode: Mode = Mode.ANALYTIC):
    """Per scheme, the q in [q_min, K] with least total delay (smallest q on ties)."""
    best = {}
    for q in q_range(config):
        rows = total_delays(schemes, config, q, mode)
        for s in schemes:
            if s not in best or rows[s].total_delay < best[s].total_delay:
                best[s] = rows[s]
    return best
