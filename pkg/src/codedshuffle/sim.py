"""Straggler sampling, constructive shuffle schedules, and end-to-end runs.

Schedules work at IV granularity. A transmission in multiplicity group j
lasts ``delivered / gain(scheme, j, q, alpha)`` IV-times, which folds the
sub-packetisation of coded multicasting into the accounting; summing and
normalising by ``N*m`` reproduces the closed-form shuffle delay exactly.
"""
from __future__ import annotations

import math
import random
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .config import SystemConfig, as_fraction
from .delay_model import INF, Scheme, gain, map_delay, shuffle_delay_fixed
from .errors import InfeasibleConfig, ScheduleError
from .ff_poly import MultivariatePolynomial, poly_eval, poly_eval_many
from .lagrange_code import CodeParams, IntermediateValue, decode_outputs, encode
from .placement import (PlacementMap, assign_batches, feasibility, multiplicity_profile,
                        stored_per_device)

MC_BLOCK = 8192

# ---------------------------------------------------------------- Map phase


@dataclass(frozen=True)
class MapSample:
    times: tuple
    nonstragglers: frozenset
    map_delay_sample: float


def sample_map_times(config: SystemConfig, q: int, rng_seed=None, rng=None) -> MapSample:
    """One Map phase: T_k = (mu/2)(1 + Exp(1)); the q earliest devices survive.

    ``rng`` may be any object with ``standard_exponential(size)``; by default a
    numpy Generator seeded with ``rng_seed``. Ties go to the lower device id.
    """
    if rng is None:
        rng = np.random.default_rng(rng_seed)
    x = np.asarray(rng.standard_exponential(config.K), dtype=float)
    times = float(config.mu) / 2 * (1 + x)
    order = sorted(range(config.K), key=lambda k: (times[k], k))
    survivors = frozenset(order[:q])
    return MapSample(tuple(float(t) for t in times), survivors, float(times[order[q - 1]]))


def map_delay_samples(K: int, mu, q: int, trials: int, seed: int) -> np.ndarray:
    """q-th order statistics of ``trials`` independent Map phases.

    Trials are drawn in fixed blocks, block ``i`` from a generator seeded by
    ``(seed, i)``, so results do not depend on how blocks are scheduled.
    """
    scale = float(as_fraction(mu)) / 2
    out = np.empty(trials)
    for block, start in enumerate(range(0, trials, MC_BLOCK)):
        n = min(MC_BLOCK, trials - start)
        rng = np.random.default_rng([seed, block])
        x = rng.standard_exponential((n, K))
        kth = np.partition(x, q - 1, axis=1)[:, q - 1]
        out[start:start + n] = scale * (1 + kth)
    return out


# ------------------------------------------------------------ Shuffle phase


def assign_functions(N: int, nonstragglers) -> dict:
    """Contiguous blocks of N/q function ids, in ascending device order."""
    survivors = sorted(nonstragglers)
    q = len(survivors)
    if N % q:
        raise InfeasibleConfig(f"N={N} functions do not split over q={q} devices")
    per = N // q
    return {k: tuple(range(i * per, (i + 1) * per)) for i, k in enumerate(survivors)}


@dataclass(frozen=True)
class Delivery:
    function: int
    row: int
    receiver: int
    layer: str  # "cm" or "zf"


@dataclass(frozen=True)
class Transmission:
    group_multiplicity: int
    payload: tuple
    duration: object  # Fraction, or INF at zero rate
    clusters: tuple = ()  # zero-forcing clusters
    multicast_sender: int | None = None

    @property
    def senders(self) -> frozenset:
        out = set().union(*self.clusters) if self.clusters else set()
        if self.multicast_sender is not None:
            out.add(self.multicast_sender)
        return frozenset(out)

    @property
    def receivers(self) -> frozenset:
        return frozenset(d.receiver for d in self.payload)


@dataclass(frozen=True)
class ShuffleSchedule:
    scheme: Scheme
    transmissions: tuple
    q: int


def _survivor_holders(placement: PlacementMap, survivors: frozenset):
    return [h & survivors for h in placement.row_holders]


def _demands(placement, profile, survivors, assignment):
    """Per multiplicity group, the (receiver, function, row) triples to deliver."""
    holders = _survivor_holders(placement, survivors)
    groups = defaultdict(list)
    if profile.empty:
        return groups
    partial = profile.s_q - 1
    if profile.remainder.denominator != 1:
        raise ScheduleError("fractional remainder: concrete batch size required")
    for k in sorted(survivors):
        by_mult = defaultdict(list)
        for c in range(placement.m_prime):
            if c not in placement.per_device[k]:
                by_mult[len(holders[c])].append(c)
        for j in range(profile.s_max, profile.s_q - 1, -1):
            if len(by_mult[j]) != profile.counts[j]:
                raise ScheduleError(
                    f"device {k}: {len(by_mult[j])} rows at multiplicity {j}, "
                    f"profile expects {profile.counts[j]}")
        chosen = {j: by_mult[j] for j in range(profile.s_q, profile.s_max + 1)}
        if profile.remainder:
            if len(by_mult[partial]) < profile.remainder:
                raise ScheduleError(f"device {k}: partial group {partial} too small")
            chosen[partial] = sorted(by_mult[partial])[:int(profile.remainder)]
        for n in assignment[k]:
            for j, rows in chosen.items():
                groups[j].extend((k, n, c) for c in rows)
    return groups


class _Pool:
    """Pending deliveries of one group, indexed by holder set and by T = H+{r}."""

    def __init__(self, items, holders):
        self.pending = set()
        self.by_holder = defaultdict(list)
        self.by_team = defaultdict(list)
        self.teams_of = defaultdict(set)
        for item in items:
            r, _, c = item
            h = holders[c]
            team = h | {r}
            self.pending.add(item)
            self.by_holder[h].append(item)
            self.by_team[team].append(item)
            for k in team:
                self.teams_of[k].add(team)
        self.holder_order = sorted(self.by_holder, key=sorted)

    def take(self, bucket, receivers_allowed, limit, exclude_receivers=()):
        """Pop pending items from ``bucket`` with distinct receivers."""
        out, used = [], set(exclude_receivers)
        for item in bucket:
            if len(out) == limit:
                break
            r = item[0]
            if item in self.pending and r not in used and r in receivers_allowed:
                out.append(item)
                used.add(r)
        for item in out:
            self.pending.discard(item)
        return out

    def pending_in(self, bucket):
        return [it for it in bucket if it in self.pending]


def _cm_group(pool, j, rate):
    transmissions = []
    for team in sorted(pool.by_team, key=sorted):
        bucket = pool.by_team[team]
        while True:
            live = pool.pending_in(bucket)
            if not live:
                break
            load = defaultdict(int)
            for r, _, _ in live:
                load[r] += 1
            sender = min(team, key=lambda k: (load[k], k))
            got = pool.take(live, team - {sender}, j)
            transmissions.append(_make(j, got, "cm", rate, multicast_sender=sender))
    return transmissions


def _clusters(holder, survivors, j, q):
    if q >= 2 * j:
        return frozenset(holder), None
    half = math.ceil(q / 2)
    send = frozenset(sorted(holder)[:half])
    return send, survivors - send


def _zf_step(pool, holder, survivors, j, q):
    send, recv = _clusters(holder, survivors, j, q)
    if recv is None:
        got = pool.take(pool.by_holder[holder], survivors - send, j)
        recv = set(r for r, _, _ in got)
        for k in sorted(survivors - send - recv):
            if len(recv) == j:
                break
            recv.add(k)
        recv = frozenset(recv)
        back = pool.take(pool.by_holder.get(recv, ()), send, j)
    else:
        got = pool.take(pool.by_holder[holder], recv, len(recv))
        back = []
        for h in pool.holder_order:
            if recv <= h and len(back) < len(send):
                back += pool.take(pool.by_holder[h], send, len(send) - len(back),
                                  exclude_receivers=[r for r, _, _ in back])
    return (send, recv), got + back


def _sc_multicast(pool, active, j):
    for s in sorted(active):
        for team in sorted(pool.teams_of[s], key=sorted):
            got = pool.take(pool.by_team[team], team - {s}, j)
            if got:
                return s, got
    return None, []


def _coop_group(pool, j, q, survivors, rate, superpose):
    transmissions = []
    for holder in pool.holder_order:
        while pool.pending_in(pool.by_holder[holder]):
            clusters, zf = _zf_step(pool, holder, survivors, j, q)
            sender, cm = (None, [])
            if superpose:
                sender, cm = _sc_multicast(pool, clusters[0] | clusters[1], j)
            payload = [Delivery(n, c, r, "zf") for r, n, c in zf]
            payload += [Delivery(n, c, r, "cm") for r, n, c in cm]
            duration = INF if rate == 0 else Fraction(len(payload)) / rate
            transmissions.append(Transmission(j, tuple(payload), duration,
                                              clusters=clusters, multicast_sender=sender))
    return transmissions


def _make(j, items, layer, rate, multicast_sender=None):
    payload = tuple(Delivery(n, c, r, layer) for r, n, c in items)
    duration = INF if rate == 0 else Fraction(len(payload)) / rate
    return Transmission(j, payload, duration, multicast_sender=multicast_sender)


def build_schedule(scheme: Scheme, placement: PlacementMap, profile, nonstragglers,
                   assignment: dict, alpha=1) -> ShuffleSchedule:
    """Deliver every missing IV the profile calls for, high multiplicity first."""
    survivors = frozenset(nonstragglers)
    q = len(survivors)
    holders = _survivor_holders(placement, survivors)
    groups = _demands(placement, profile, survivors, assignment)
    transmissions = []
    for j in sorted(groups, reverse=True):
        if j < 1:
            raise ScheduleError("multiplicity-0 IVs cannot be shuffled")
        pool = _Pool(groups[j], holders)
        rate = gain(scheme, j, q, alpha)
        if scheme is Scheme.CM:
            transmissions += _cm_group(pool, j, rate)
        else:
            transmissions += _coop_group(pool, j, q, survivors, rate,
                                         superpose=scheme is Scheme.SC)
        if pool.pending:
            raise ScheduleError(f"{len(pool.pending)} IVs left undelivered in group {j}")
    return ShuffleSchedule(scheme, tuple(transmissions), q)


def schedule_problems(schedule: ShuffleSchedule, placement: PlacementMap, nonstragglers,
                      assignment: dict, m_star: int, uncoded: bool = False) -> list[str]:
    """Every violated condition, as readable strings (empty when valid)."""
    survivors = frozenset(nonstragglers)
    q = len(survivors)
    holders = _survivor_holders(placement, survivors)
    received = defaultdict(set)
    problems = []

    def knows(k, n, c):
        return k in survivors and (c in placement.per_device[k] or (n, c) in received[k])

    last_j = math.inf
    for t, tx in enumerate(schedule.transmissions):
        j = tx.group_multiplicity
        if j > last_j:
            problems.append(f"tx {t}: multiplicity {j} after {last_j}")
        last_j = j
        if not tx.senders <= survivors or not tx.receivers <= survivors:
            problems.append(f"tx {t}: straggler takes part")
        cm = [d for d in tx.payload if d.layer == "cm"]
        zf = [d for d in tx.payload if d.layer == "zf"]
        for d in tx.payload:
            if len(holders[d.row] - {d.receiver}) != j:
                problems.append(f"tx {t}: row {d.row} is not at multiplicity {j}")
        if cm:
            s = tx.multicast_sender
            group = [d.receiver for d in cm]
            if s is None or len(set(group)) != len(group) or len(group) > j or s in group:
                problems.append(f"tx {t}: malformed multicast")
            for d in cm:
                side = [k for k in group if k != d.receiver] + [s]
                if not all(knows(k, d.function, d.row) for k in side):
                    problems.append(f"tx {t}: multicast IV {(d.function, d.row)} "
                                    f"for {d.receiver} not decodable")
        if zf:
            if len(tx.clusters) != 2:
                problems.append(f"tx {t}: zero-forcing needs two clusters")
            else:
                a, b = tx.clusters
                if q >= 2 * j:
                    sizes_ok = len(a) == len(b) == j and not a & b
                else:
                    sizes_ok = (a | b == survivors and not a & b
                                and len(a) == math.ceil(q / 2))
                if not sizes_ok:
                    problems.append(f"tx {t}: cluster sizes {len(a)}/{len(b)} invalid for j={j}")
                group = [d.receiver for d in zf]
                if len(set(group)) != len(group):
                    problems.append(f"tx {t}: receiver served twice by zero-forcing")
                for d in zf:
                    src = b if d.receiver in a else a if d.receiver in b else None
                    if src is None or not all(knows(k, d.function, d.row) for k in src):
                        problems.append(f"tx {t}: cluster cannot send {(d.function, d.row)} "
                                        f"to {d.receiver}")
        for d in tx.payload:
            received[d.receiver].add((d.function, d.row))

    target = placement.m_prime if uncoded else m_star
    for k, functions in assignment.items():
        for n in functions:
            have = sum(1 for c in range(placement.m_prime) if knows(k, n, c))
            if have < target:
                problems.append(f"device {k} holds {have} IVs of function {n}, needs {target}")
    return problems


def verify_schedule(schedule, placement, nonstragglers, assignment, m_star,
                    uncoded: bool = False) -> bool:
    return not schedule_problems(schedule, placement, nonstragglers, assignment, m_star,
                                 uncoded)


def schedule_delay(schedule: ShuffleSchedule, m: int, N: int):
    total = Fraction(0)
    for tx in schedule.transmissions:
        if tx.duration == INF:
            return INF
        total += tx.duration
    return total / (N * m)


# ------------------------------------------------------------- end to end


@dataclass
class EndToEndReport:
    scheme: Scheme
    stragglers: tuple
    outputs: dict  # function id -> decoded outputs
    all_correct: bool
    schedule_valid: bool
    schedule_delay: object
    closed_form_delay: object
    problems: list = field(default_factory=list)

    @property
    def residual(self):
        if self.schedule_delay == self.closed_form_delay:
            return Fraction(0)
        return abs(self.schedule_delay - self.closed_form_delay)


def random_instance(config: SystemConfig, nvars: int, seed, p: int):
    """Random functions of degree ``config.d`` and random data rows."""
    rng = random.Random(seed)
    functions = [MultivariatePolynomial.random(rng, nvars, config.d, p, density=0.6)
                 for _ in range(config.N)]
    data = [tuple(rng.randrange(p) for _ in range(nvars)) for _ in range(config.m)]
    return functions, data


def check_concrete(config: SystemConfig, params: CodeParams, q: int) -> None:
    """Raise InfeasibleConfig unless (config, code, q) can actually run."""
    K = config.K
    if params.K != K:
        raise InfeasibleConfig("code parameters were built for a different K")
    if not 1 <= q <= K:
        raise InfeasibleConfig(f"q={q} outside [1, K={K}]")
    if config.N % q:
        raise InfeasibleConfig(f"q={q} does not divide N={config.N}")
    if params.r1 * params.r2 > config.mu * K:
        raise InfeasibleConfig(f"r1*r2 = {params.r1 * params.r2} exceeds mu*K = {config.mu * K}")
    if params.m != config.m or params.d != config.d:
        raise InfeasibleConfig("code parameters do not match m/d of the system")
    if not feasibility(K, q, config.m, config.d, params.r1, params.r2):
        raise InfeasibleConfig(f"(r1={params.r1}, r2={params.r2}) cannot tolerate "
                               f"{K - q} stragglers")


def run_end_to_end(config: SystemConfig, params: CodeParams, scheme: Scheme, straggler_set,
                   functions: Sequence[MultivariatePolynomial] | None = None,
                   data=None, rng_seed=0, nvars: int = 1) -> EndToEndReport:
    """Map, shuffle and reduce once with an explicit straggler set."""
    K = config.K
    stragglers = frozenset(straggler_set)
    if not stragglers <= set(range(K)):
        raise InfeasibleConfig(f"straggler ids {sorted(stragglers)} outside [0, {K})")
    survivors = frozenset(range(K)) - stragglers
    q = len(survivors)
    check_concrete(config, params, q)
    if functions is None or data is None:
        functions, data = random_instance(config, nvars, rng_seed, params.p)
    if len(functions) != config.N:
        raise InfeasibleConfig(f"{len(functions)} functions for N={config.N}")

    placement = assign_batches(K, params.r2, params.b, params.m_prime)
    coded = encode(data, params)

    # Map: only rows held by a survivor produce usable IVs
    live_rows = sorted(set().union(*(placement.per_device[k] for k in survivors)))
    ivs = {}
    live_points = [coded.rows[c] for c in live_rows]
    for n, f in enumerate(functions):
        for c, v in zip(live_rows, poly_eval_many(f, live_points)):
            ivs[n, c] = v

    stored = stored_per_device(K, params.r2, params.b)
    profile = multiplicity_profile(K, q, params.r2, params.b, params.m_star, stored)
    assignment = assign_functions(config.N, survivors)
    schedule = build_schedule(scheme, placement, profile, survivors, assignment, config.alpha)
    uncoded = params.uncoded
    problems = schedule_problems(schedule, placement, survivors, assignment, params.m_star,
                                 uncoded)
    schedule_valid = not problems

    # Shuffle: IV values travel with the deliveries
    inbox = defaultdict(dict)
    for tx in schedule.transmissions:
        for d in tx.payload:
            inbox[d.receiver][d.function, d.row] = ivs[d.function, d.row]

    # Reduce
    outputs, all_correct = {}, True
    for k, assigned in assignment.items():
        for n in assigned:
            local = [IntermediateValue(n, params.code_nodes[c], ivs[n, c])
                     for c in sorted(placement.per_device[k])]
            remote = [IntermediateValue(n, params.code_nodes[c], v)
                      for (fn, c), v in inbox[k].items() if fn == n]
            try:
                decoded = decode_outputs(config.d, local + remote, params)
            except Exception as exc:  # decoding failure is a wrong answer, not a crash
                problems.append(f"device {k} failed to decode function {n}: {exc}")
                decoded = None
            outputs[n] = decoded
            direct = [poly_eval(functions[n], a) for a in data]
            all_correct &= decoded == direct

    closed = shuffle_delay_fixed(scheme, profile, config.m, q, config.alpha)
    return EndToEndReport(
        scheme=scheme,
        stragglers=tuple(sorted(stragglers)),
        outputs=outputs,
        all_correct=all_correct,
        schedule_valid=schedule_valid,
        schedule_delay=schedule_delay(schedule, config.m, config.N),
        closed_form_delay=closed,
        problems=problems,
    )


def expected_map_delay(config: SystemConfig, q: int) -> Fraction:
    return map_delay(config.mu, q, config.K)
