import random
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from codedshuffle.config import SystemConfig
from codedshuffle.delay_model import INF, Scheme, map_delay, shuffle_delay_fixed
from codedshuffle.errors import InfeasibleConfig
from codedshuffle.ff_poly import MultivariatePolynomial
from codedshuffle.lagrange_code import CodeParams
from codedshuffle.placement import assign_batches, multiplicity_profile
from codedshuffle.sim import (ShuffleSchedule, assign_functions, build_schedule,
                              map_delay_samples, run_end_to_end, sample_map_times,
                              schedule_delay, schedule_problems, verify_schedule)

from instances import concrete_instances

ALPHA = Fraction(3, 4)
SMALL = SystemConfig(K=4, mu=1, N=3, m=3, d=2, alpha=ALPHA)


class ZeroExponential:
    def standard_exponential(self, size):
        return np.zeros(size)


def k4_setup():
    placement = assign_batches(4, 2, 1, 6)
    profile = multiplicity_profile(4, 3, 2, 1, 5, 3)
    survivors = frozenset({0, 1, 2})
    return placement, profile, survivors, assign_functions(3, survivors)


def test_degenerate_rng_gives_the_shift():
    cfg = SystemConfig(K=5, mu=Fraction(1, 2), N=5, m=4, d=1)
    sample = sample_map_times(cfg, 3, rng=ZeroExponential())
    assert sample.times == (0.25,) * 5
    assert sample.map_delay_sample == 0.25
    assert sample.nonstragglers == {0, 1, 2}  # ties go to lower ids


def test_sample_map_times_picks_fastest():
    cfg = SystemConfig(K=6, mu=Fraction(1, 2), N=6, m=4, d=1)
    s = sample_map_times(cfg, 4, rng_seed=11)
    order = sorted(range(6), key=lambda k: s.times[k])
    assert s.nonstragglers == set(order[:4])
    assert s.map_delay_sample == max(s.times[k] for k in s.nonstragglers)
    assert sample_map_times(cfg, 4, rng_seed=11) == s


@pytest.mark.parametrize("K,q", [(30, 15), (2, 1)])
def test_monte_carlo_map_delay(K, q):
    samples = map_delay_samples(K, Fraction(1, 2), q, 100_000, seed=5)
    assert samples.mean() == pytest.approx(float(map_delay(Fraction(1, 2), q, K)), rel=0.01)
    assert np.array_equal(samples, map_delay_samples(K, Fraction(1, 2), q, 100_000, seed=5))


def test_monte_carlo_blocks_are_prefix_stable():
    long = map_delay_samples(10, 1, 4, 20_000, seed=1)
    short = map_delay_samples(10, 1, 4, 9_000, seed=1)
    assert np.array_equal(long[:8192], short[:8192])


def test_assign_functions():
    assert assign_functions(6, {4, 0, 2}) == {0: (0, 1), 2: (2, 3), 4: (4, 5)}
    with pytest.raises(InfeasibleConfig):
        assign_functions(5, {0, 1})


def test_empty_schedule_when_nothing_is_missing():
    placement = assign_batches(4, 2, 1, 6)
    profile = multiplicity_profile(4, 3, 2, 1, 3, 3)
    survivors = frozenset({0, 1, 2})
    assignment = assign_functions(3, survivors)
    schedule = build_schedule(Scheme.CM, placement, profile, survivors, assignment)
    assert schedule.transmissions == ()
    assert verify_schedule(schedule, placement, survivors, assignment, 3)
    assert schedule_delay(schedule, 3, 3) == 0


def test_k4_schedules():
    placement, profile, survivors, assignment = k4_setup()
    expected = {Scheme.CM: Fraction(1, 2), Scheme.ZF: Fraction(10, 27), Scheme.SC: Fraction(24, 77)}
    for scheme, delay in expected.items():
        schedule = build_schedule(scheme, placement, profile, survivors, assignment, ALPHA)
        assert verify_schedule(schedule, placement, survivors, assignment, 5)
        assert schedule_delay(schedule, 3, 3) == delay


def test_deleting_a_transmission_breaks_the_schedule():
    placement, profile, survivors, assignment = k4_setup()
    for scheme in Scheme:
        schedule = build_schedule(scheme, placement, profile, survivors, assignment, ALPHA)
        for i in range(len(schedule.transmissions)):
            txs = schedule.transmissions[:i] + schedule.transmissions[i + 1:]
            broken = ShuffleSchedule(scheme, txs, schedule.q)
            problems = schedule_problems(broken, placement, survivors, assignment, 5)
            assert any("needs 5" in p for p in problems)


def test_straggler_in_schedule_is_rejected():
    placement, profile, survivors, assignment = k4_setup()
    schedule = build_schedule(Scheme.CM, placement, profile, survivors, assignment)
    assert not verify_schedule(schedule, placement, frozenset({0, 1, 3}),
                               {0: (0,), 1: (1,), 3: (2,)}, 5)


def test_zero_rate_schedule_is_infinite():
    placement, profile, survivors, assignment = k4_setup()
    schedule = build_schedule(Scheme.ZF, placement, profile, survivors, assignment, 0)
    assert schedule_delay(schedule, 3, 3) == INF


def test_schedules_match_closed_form_on_small_systems():
    rng = random.Random(2)
    cases = list(concrete_instances(max_K=6))
    for K, q, m, d, r1, r2, placement, profile, survivors, assignment in rng.sample(cases, 150):
        m_star = m if r1 == 1 else (m - 1) * d + 1
        alpha = Fraction(rng.randrange(5), 4)
        for scheme in Scheme:
            schedule = build_schedule(scheme, placement, profile, survivors, assignment, alpha)
            assert verify_schedule(schedule, placement, survivors, assignment, m_star, r1 == 1)
            assert schedule_delay(schedule, m, q) == shuffle_delay_fixed(scheme, profile, m, q,
                                                                         alpha)


def test_end_to_end_square_every_straggler():
    params = CodeParams.build(m=3, d=2, r1=2, K=4, r2=2)
    square = MultivariatePolynomial.from_terms([(1, (2,))], 1, params.p)
    data = [(1,), (2,), (3,)]
    for straggler in range(4):
        for scheme in Scheme:
            report = run_end_to_end(SMALL, params, scheme, {straggler},
                                    functions=[square] * 3, data=data)
            assert report.all_correct and report.schedule_valid
            assert report.outputs == {0: [1, 4, 9], 1: [1, 4, 9], 2: [1, 4, 9]}
            assert report.residual == 0


def test_end_to_end_uncoded_without_stragglers():
    cfg = SystemConfig(K=3, mu=Fraction(1, 3), N=3, m=3, d=2)
    params = CodeParams.build(m=3, d=2, r1=1, K=3, r2=1)
    for scheme in Scheme:
        report = run_end_to_end(cfg, params, scheme, set(), rng_seed=4, nvars=2)
        assert report.all_correct and report.schedule_valid and report.residual == 0


def test_end_to_end_identity_function():
    cfg = SystemConfig(K=2, mu=1, N=2, m=1, d=1)
    params = CodeParams.build(m=1, d=1, r1=1, K=2, r2=2)
    ident = MultivariatePolynomial.from_terms([(1, (1,))], 1, params.p)
    report = run_end_to_end(cfg, params, Scheme.CM, set(), functions=[ident] * 2, data=[(17,)])
    assert report.outputs == {0: [17], 1: [17]} and report.all_correct


def test_end_to_end_random_instances():
    cfg = SystemConfig(K=5, mu=Fraction(4, 5), N=4, m=4, d=2, alpha=Fraction(1, 2))
    params = CodeParams.build(m=4, d=2, r1=Fraction(5, 2), K=5, r2=1)
    for stragglers in combinations(range(5), 1):
        for scheme in Scheme:
            report = run_end_to_end(cfg, params, scheme, stragglers, rng_seed=9, nvars=3)
            assert report.all_correct and report.schedule_valid and report.residual == 0


def test_end_to_end_rejects_infeasible_configs():
    params = CodeParams.build(m=3, d=2, r1=2, K=4, r2=2)
    with pytest.raises(InfeasibleConfig):
        run_end_to_end(SMALL, params, Scheme.CM, {0, 1})  # two stragglers
    with pytest.raises(InfeasibleConfig):
        run_end_to_end(SMALL.replace(N=4), params, Scheme.CM, {0})  # 3 does not divide 4
    with pytest.raises(InfeasibleConfig):
        run_end_to_end(SMALL, params, Scheme.CM, {7})


def test_end_to_end_is_reproducible():
    params = CodeParams.build(m=3, d=2, r1=2, K=4, r2=2)
    a = run_end_to_end(SMALL, params, Scheme.SC, {2}, rng_seed=3, nvars=2)
    b = run_end_to_end(SMALL, params, Scheme.SC, {2}, rng_seed=3, nvars=2)
    assert a == b
