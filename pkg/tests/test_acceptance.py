"""Release gate: each test checks one acceptance criterion at its stated tolerance.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""
import random
import time
from fractions import Fraction
from itertools import combinations

import mpmath
import numpy as np
import pytest

from codedshuffle.config import REFERENCE_SYSTEM, SystemConfig
from codedshuffle.delay_model import (Mode, Scheme, feasible_pairs, map_delay,
                                      min_shuffle_delay, optimize_q_all, q_range,
                                      shuffle_delay_fixed, total_delays)
from codedshuffle.ff_poly import MultivariatePolynomial, poly_eval
from codedshuffle.lagrange_code import CodeParams, IntermediateValue, decode_outputs, encode
from codedshuffle.placement import (assign_batches, binom, coverage_check_bruteforce,
                                    feasibility, multiplicity_profile)
from codedshuffle.sim import (build_schedule, map_delay_samples, run_end_to_end,
                              schedule_delay, verify_schedule)

from instances import concrete_instances
from oracles import harmonic_map_delay

ALPHA_GRID = [Fraction(i, 10) for i in range(11)]
SCHEMES = list(Scheme)


def random_code(rng):
    """Random (K, m, d, r1, r2) with integral batches and a genuine Lagrange layer."""
    while True:
        K, m, d = rng.randint(2, 6), rng.randint(1, 8), rng.randint(1, 3)
        r2 = rng.randint(1, K)
        b = rng.randint(1, 4)
        m_prime = b * binom(K, r2)
        if m_prime > m and m_prime >= (m - 1) * d + 1:
            return CodeParams.build(m, d, Fraction(m_prime, m), K=K, r2=r2)


@pytest.mark.criterion(1, "decode equals direct evaluation on 200 random instances")
def test_decode_oracle():
    rng = random.Random(2024)
    start = time.perf_counter()
    for _ in range(200):
        params = random_code(rng)
        nvars = rng.randint(1, 3)
        f = MultivariatePolynomial.random(rng, nvars, params.d, params.p)
        data = [tuple(rng.randrange(params.p) for _ in range(nvars)) for _ in range(params.m)]
        coded = encode(data, params)
        chosen = rng.sample(range(params.m_prime), params.m_star)
        ivs = [IntermediateValue(0, params.code_nodes[c], poly_eval(f, coded.rows[c]))
               for c in chosen]
        assert decode_outputs(params.d, ivs, params) == [poly_eval(f, a) for a in data]
    assert time.perf_counter() - start < 10


@pytest.mark.criterion(2, "storage condition matches brute-force straggler coverage, K <= 6")
def test_feasibility_oracle():
    start = time.perf_counter()
    checked = 0
    for K in range(1, 7):
        for r2 in range(1, K + 1):
            batches = binom(K, r2)
            for m in range(1, 7):
                # r1 = 1 needs b = m / C(K, r2); coded r1 takes every b with b C(K, r2) in (m, K m]
                codes = [(Fraction(1), m // batches)] if m % batches == 0 else []
                codes += [(Fraction(b * batches, m), b)
                          for b in range(1, K * m // batches + 1) if b * batches > m]
                for r1, b in codes:
                    placement = assign_batches(K, r2, b, b * batches)
                    for d in (1, 2, 3):
                        m_star = m if r1 == 1 else (m - 1) * d + 1
                        for q in range(1, K + 1):
                            verdict = feasibility(K, q, m, d, r1, r2)
                            brute = coverage_check_bruteforce(placement, q, m_star,
                                                              uncoded=r1 == 1)
                            assert verdict == brute, (K, q, m, d, r1, r2)
                            checked += 1
    assert checked > 1000
    assert time.perf_counter() - start < 60


@pytest.mark.criterion(3, "schedule delay equals closed form on concrete systems, K <= 8")
def test_schedule_matches_closed_form():
    rng = random.Random(7)
    cases = list(concrete_instances(max_K=8))
    picked = [c for c in cases if c[0] <= 4] + rng.sample([c for c in cases if c[0] > 4], 300)
    count = 0
    for K, q, m, d, r1, r2, placement, profile, survivors, assignment in picked:
        m_star = m if r1 == 1 else (m - 1) * d + 1
        alpha = rng.choice(ALPHA_GRID)
        for scheme in SCHEMES:
            schedule = build_schedule(scheme, placement, profile, survivors, assignment, alpha)
            assert verify_schedule(schedule, placement, survivors, assignment, m_star, r1 == 1)
            closed = shuffle_delay_fixed(scheme, profile, m, q, alpha)
            assert schedule_delay(schedule, m, q) == closed  # N = q here
            count += 1
    assert count >= 50


def _dominance_and_endpoints(profile, m, q):
    for alpha in ALPHA_GRID:
        cm, zf, sc = (shuffle_delay_fixed(s, profile, m, q, alpha) for s in SCHEMES)
        assert sc <= min(cm, zf)
        if alpha == 0:
            assert sc == cm
        if alpha == 1:
            assert sc == zf


@pytest.mark.criterion(4, "superposition dominance and alpha endpoints, exact")
def test_dominance_and_endpoints():
    system = REFERENCE_SYSTEM
    n = 0
    for q in range(1, system.K + 1):
        for _, _, profile in feasible_pairs(system, q, Mode.ANALYTIC):
            _dominance_and_endpoints(profile, system.m, q)
            n += 1
    assert n > 1000
    for K, q, m, _, _, _, _, profile, _, _ in concrete_instances(max_K=8):
        _dominance_and_endpoints(profile, m, q)


@pytest.mark.criterion(5, "total-delay curves of the reference system")
def test_reference_curves():
    start = time.perf_counter()
    system = REFERENCE_SYSTEM
    mpmath.mp.dps = 40
    maps = []
    for q in range(1, system.K + 1):
        dm = map_delay(system.mu, q, system.K)
        ref = harmonic_map_delay(system.mu, q, system.K)
        assert mpmath.nstr(mpmath.mpf(dm.numerator) / dm.denominator, 12) == mpmath.nstr(ref, 12)
        maps.append(dm)
    assert all(a < b for a, b in zip(maps, maps[1:]))

    qs = list(q_range(system))
    rows = {q: total_delays(SCHEMES, system, q) for q in qs}
    for q in qs:
        sc = rows[q][Scheme.SC].total_delay
        assert sc <= rows[q][Scheme.CM].total_delay and sc <= rows[q][Scheme.ZF].total_delay
    for s in SCHEMES:
        best = min(qs, key=lambda q: rows[q][s].total_delay)
        assert qs[0] < best < qs[-1], (s, best)
    assert time.perf_counter() - start < 30


@pytest.mark.criterion(6, "shuffle delay against function degree at q = 20 and q = 10")
def test_degree_sweep():
    for s in SCHEMES:
        at20 = [min_shuffle_delay(s, REFERENCE_SYSTEM.replace(d=d), 20) for d in range(1, 7)]
        assert len({delay for delay, _, _ in at20}) == 1
        assert all(r1 == 1 for _, r1, _ in at20)
        at10 = [min_shuffle_delay(s, REFERENCE_SYSTEM.replace(d=d), 10)[0] for d in range(1, 7)]
        assert all(a <= b for a, b in zip(at10, at10[1:]))


@pytest.mark.criterion(7, "optimised superposition total meets ZF at alpha=1 and CM at alpha=0")
def test_alpha_endpoints_with_optimised_q():
    full = optimize_q_all(SCHEMES, REFERENCE_SYSTEM.replace(alpha=1))
    assert full[Scheme.SC].total_delay == full[Scheme.ZF].total_delay
    none = optimize_q_all(SCHEMES, REFERENCE_SYSTEM.replace(alpha=0))
    assert none[Scheme.SC].total_delay == none[Scheme.CM].total_delay


@pytest.mark.criterion(8, "Monte Carlo Map delay within 1% over 1e5 trials")
def test_monte_carlo_map_delay():
    start = time.perf_counter()
    mu = Fraction(1, 2)
    for q in (5, 15, 25):
        samples = map_delay_samples(30, mu, q, 100_000, seed=12345)
        expected = float(harmonic_map_delay(mu, q, 30))
        assert abs(samples.mean() - expected) / expected < 0.01
        assert np.array_equal(samples, map_delay_samples(30, mu, q, 100_000, seed=12345))
    assert time.perf_counter() - start < 20


@pytest.mark.criterion(9, "end-to-end K=4 system, every straggler set, every scheme")
def test_end_to_end_exhaustive():
    system = SystemConfig(K=4, mu=1, N=3, m=3, d=2, alpha=Fraction(3, 4))
    params = CodeParams.build(m=3, d=2, r1=2, K=4, r2=2)
    assert params.b == 1
    for stragglers in combinations(range(4), 1):
        for scheme in SCHEMES:
            report = run_end_to_end(system, params, scheme, stragglers, rng_seed=1, nvars=2)
            assert report.all_correct, report.problems
            assert report.schedule_valid, report.problems
            assert report.residual == 0
