"""Command-line front end: analyze, optimize, simulate, sweep.

Exit codes: 0 success, 2 invalid or infeasible configuration, 1 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from .config import SystemConfig, as_fraction
from .delay_model import (INF, Mode, Scheme, map_delay, min_shuffle_delay, optimize_q_all,
                          q_range, total_delays)
from .errors import CodedShuffleError, InfeasibleConfig
from .ff_poly import DEFAULT_PRIME
from .lagrange_code import CodeParams
from .sim import map_delay_samples, random_instance, run_end_to_end, sample_map_times

log = logging.getLogger("codedshuffle")

ANALYZE_COLUMNS = [
    "q", "delta_map",
    "delta_shuffle_cm", "delta_shuffle_zf", "delta_shuffle_sc",
    "delta_total_cm", "delta_total_zf", "delta_total_sc",
    "r1_cm", "r2_cm", "r1_zf", "r2_zf", "r1_sc", "r2_sc",
]
RESULT_COLUMNS = ["scheme", "q", "r1", "r2", "delta_map", "delta_shuffle", "delta_total"]
SCHEME_ORDER = [Scheme.CM, Scheme.ZF, Scheme.SC]


class ConfigError(InfeasibleConfig):
    pass


@dataclass
class RunConfig:
    system: SystemConfig
    schemes: list = field(default_factory=lambda: list(SCHEME_ORDER))
    mode: Mode = Mode.ANALYTIC
    prime: int = DEFAULT_PRIME
    seed: int = 0
    trials: int = 1000
    sweep: dict | None = None
    q: list | None = None
    r1: Fraction | None = None
    r2: int | None = None
    dim: int = 1
    e2e_trials: int | None = None


def _positive_int(raw, key):
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(f"{key} must be an integer, got {raw!r}")
    return raw


def parse_config(raw: dict) -> RunConfig:
    """Validate a flat JSON config object."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {"K", "mu", "N", "m", "d", "gamma", "alpha", "scheme", "mode", "prime", "seed",
             "trials", "sweep", "q", "r1", "r2", "dim", "e2e_trials"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        system = SystemConfig(
            K=_positive_int(raw["K"], "K"), mu=as_fraction(raw["mu"]),
            N=_positive_int(raw["N"], "N"), m=_positive_int(raw["m"], "m"),
            d=_positive_int(raw["d"], "d"),
            gamma=as_fraction(raw.get("gamma", 1)), alpha=as_fraction(raw.get("alpha", 1)))
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from None
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None

    scheme = str(raw.get("scheme", "all"))
    try:
        schemes = list(SCHEME_ORDER) if scheme == "all" else [Scheme.parse(scheme)]
        mode = Mode(raw.get("mode", "analytic"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    prime = _positive_int(raw.get("prime", DEFAULT_PRIME), "prime")
    if not sympy.isprime(prime):
        raise ConfigError(f"prime={prime} is not prime")
    floor_store = system.max_r2
    if prime <= system.m + floor_store * system.m:
        raise ConfigError(f"prime={prime} must exceed m + floor(mu K) m = "
                          f"{system.m + floor_store * system.m}")

    seed = _positive_int(raw.get("seed", 0), "seed")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must fit in 64 unsigned bits")
    trials = _positive_int(raw.get("trials", 1000), "trials")
    if trials < 0:
        raise ConfigError("trials must be >= 0")

    q = raw.get("q")
    if q is not None:
        q = [q] if isinstance(q, int) else list(q)
        for v in q:
            _positive_int(v, "q")
            if not 1 <= v <= system.K:
                raise ConfigError(f"q={v} outside [1, K]")

    sweep = raw.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict) or sweep.get("var") not in ("q", "d", "alpha", "none"):
            raise ConfigError("sweep must be an object with var in {q, d, alpha, none}")
        if sweep["var"] != "none":
            for key in ("from", "to"):
                if key not in sweep:
                    raise ConfigError(f"sweep.{key} is required")

    cfg = RunConfig(system=system, schemes=schemes, mode=mode, prime=prime, seed=seed,
                    trials=trials, sweep=sweep, q=q, dim=_positive_int(raw.get("dim", 1), "dim"))
    if raw.get("r1") is not None:
        cfg.r1 = as_fraction(raw["r1"])
    if raw.get("r2") is not None:
        cfg.r2 = _positive_int(raw["r2"], "r2")
    if raw.get("e2e_trials") is not None:
        cfg.e2e_trials = _positive_int(raw["e2e_trials"], "e2e_trials")
    return cfg


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if x == INF:
        return "inf"
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".12g")


def _json_value(x):
    if x is None or isinstance(x, str):
        return x
    if x == INF:
        return "inf"
    if isinstance(x, int):
        return x
    return float(x)


def _write(rows, columns, fmt_name, out):
    if fmt_name == "json":
        json.dump([{c: _json_value(r[c]) for c in columns} for r in rows], out, indent=2)
        out.write("\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([fmt(r[c]) for c in columns])


def _analyze_row(args):
    system, mode, q = args
    res = total_delays(SCHEME_ORDER, system, q, mode)
    row = {"q": q, "delta_map": res[Scheme.CM].map_delay}
    for s in SCHEME_ORDER:
        tag = s.value
        row[f"delta_shuffle_{tag}"] = res[s].shuffle_delay
        row[f"delta_total_{tag}"] = res[s].total_delay
        row[f"r1_{tag}"] = res[s].r1
        row[f"r2_{tag}"] = res[s].r2
    return row


def _pmap(fn, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def analyze_rows(cfg: RunConfig, jobs: int = 1):
    qs = cfg.q if cfg.q else list(q_range(cfg.system))
    return _pmap(_analyze_row, [(cfg.system, cfg.mode, q) for q in qs], jobs)


def _result_row(b, **extra):
    row = {"scheme": b.scheme.value, "q": b.q, "r1": b.r1, "r2": b.r2,
           "delta_map": b.map_delay, "delta_shuffle": b.shuffle_delay,
           "delta_total": b.total_delay}
    row.update(extra)
    return row


def optimize_rows(cfg: RunConfig):
    best = optimize_q_all(cfg.schemes, cfg.system, cfg.mode)
    return [_result_row(best[s]) for s in cfg.schemes]


def _sweep_values(sweep):
    var = sweep["var"]
    if var in ("d", "q"):
        lo, hi, step = int(sweep["from"]), int(sweep["to"]), int(sweep.get("step", 1))
        if step < 1:
            raise ConfigError("sweep.step must be positive")
        return list(range(lo, hi + 1, step))
    lo, hi = as_fraction(sweep["from"]), as_fraction(sweep["to"])
    step = as_fraction(sweep.get("step", Fraction(1, 10)))
    if step <= 0:
        raise ConfigError("sweep.step must be positive")
    count = int((hi - lo) / step)
    return [lo + i * step for i in range(count + 1)]


def _sweep_point(args):
    system, schemes, mode, qs, var, value = args
    if qs:
        rows = []
        for q in qs:
            res = total_delays(schemes, system, q, mode)
            rows += [_result_row(res[s], **{var: value}) for s in schemes]
        return rows
    best = optimize_q_all(schemes, system, mode)
    return [_result_row(best[s], **{var: value}) for s in schemes]


def sweep_rows(cfg: RunConfig, jobs: int = 1):
    if not cfg.sweep or cfg.sweep["var"] == "none":
        raise ConfigError("sweep needs a sweep variable")
    var = cfg.sweep["var"]
    if var == "q":
        return [r for q in _sweep_values(cfg.sweep)
                for r in _sweep_point((cfg.system, cfg.schemes, cfg.mode, [q], "q", q))], ["q"]
    tasks = []
    for value in _sweep_values(cfg.sweep):
        try:
            system = cfg.system.replace(**{var: value})
        except CodedShuffleError as exc:
            raise ConfigError(f"sweep value {var}={value}: {exc}") from None
        tasks.append((system, cfg.schemes, cfg.mode, cfg.q, var, value))
    chunks = _pmap(_sweep_point, tasks, jobs)
    return [r for chunk in chunks for r in chunk], [var]


def simulate_report(cfg: RunConfig) -> dict:
    system = cfg.system
    report = {"trials": cfg.trials, "seed": cfg.seed, "schemes": {}}
    if cfg.trials == 0:
        report.update(all_correct=True, residual=0, map_delay=None)
        return report
    if cfg.q and len(cfg.q) > 1:
        raise ConfigError("simulate takes a single q")

    q = cfg.q[0] if cfg.q else None
    if q is None:
        best = optimize_q_all(cfg.schemes, system, Mode.CONCRETE)
        q = min((b for b in best.values() if b.feasible), default=None,
                key=lambda b: (b.total_delay, b.q))
        if q is None:
            raise ConfigError("no concrete configuration is feasible (integral b, q | N)")
        q = q.q
    if system.N % q:
        raise ConfigError(f"q={q} does not divide N={system.N}")

    samples = map_delay_samples(system.K, system.mu, q, cfg.trials, cfg.seed)
    expected = map_delay(system.mu, q, system.K)
    report["q"] = q
    report["map_delay"] = {
        "trials": cfg.trials,
        "empirical_mean": float(samples.mean()),
        "expected": float(expected),
        "relative_error": abs(float(samples.mean()) - float(expected)) / float(expected),
    }

    e2e = min(cfg.trials, cfg.e2e_trials if cfg.e2e_trials is not None else 100)
    all_correct, worst = True, Fraction(0)
    functions = data = None
    for scheme in cfg.schemes:
        if cfg.r1 is not None and cfg.r2 is not None:
            r1, r2 = cfg.r1, cfg.r2
        else:
            delay, r1, r2 = min_shuffle_delay(scheme, system, q, Mode.CONCRETE)
            if r2 is None:
                raise ConfigError(f"no concrete code for scheme {scheme.value} at q={q}")
        try:
            params = CodeParams.build(system.m, system.d, r1, K=system.K, r2=r2, p=cfg.prime)
        except CodedShuffleError as exc:
            raise ConfigError(f"code (r1={r1}, r2={r2}): {exc}") from None
        if functions is None:
            functions, data = random_instance(system, cfg.dim, cfg.seed, cfg.prime)
        cache = {}
        for t in range(e2e):
            survivors = sample_map_times(system, q, rng_seed=[cfg.seed, 1, t]).nonstragglers
            stragglers = frozenset(range(system.K)) - survivors
            if stragglers not in cache:
                cache[stragglers] = run_end_to_end(system, params, scheme, stragglers,
                                                   functions, data)
        runs = list(cache.values())
        ok = all(r.all_correct and r.schedule_valid for r in runs)
        residual = max((r.residual for r in runs), default=Fraction(0))
        all_correct &= ok
        worst = max(worst, residual) if residual != INF else INF
        report["schemes"][scheme.value] = {
            "r1": float(r1), "r2": r2,
            "end_to_end_trials": e2e,
            "distinct_straggler_sets": len(runs),
            "all_correct": all(r.all_correct for r in runs),
            "schedule_valid": all(r.schedule_valid for r in runs),
            "schedule_delay": _json_value(runs[0].schedule_delay) if runs else None,
            "closed_form_delay": _json_value(runs[0].closed_form_delay) if runs else None,
            "residual": _json_value(residual),
        }
    report["all_correct"] = all_correct
    report["residual"] = _json_value(worst)
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codedshuffle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("analyze", "delays per q in [q_min, K] for every scheme"),
        ("optimize", "best (q, r1, r2) per scheme"),
        ("simulate", "Monte Carlo Map delay plus end-to-end coded runs"),
        ("sweep", "delays over a d / alpha / q sweep"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="flat JSON config file")
        p.add_argument("--output", help="write here instead of stdout")
        p.add_argument("--format", choices=["csv", "json"],
                       default="json" if name == "simulate" else "csv")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--mode", choices=["analytic", "concrete"])
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _load(args) -> RunConfig:
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.trials is not None:
        raw["trials"] = args.trials
    if args.mode is not None:
        raw["mode"] = args.mode
    elif args.command == "simulate":
        raw.setdefault("mode", "concrete")
    return parse_config(raw)


def run(args, out) -> int:
    cfg = _load(args)
    if args.command == "analyze":
        rows = analyze_rows(cfg, args.jobs)
        _write(rows, ANALYZE_COLUMNS, args.format, out)
    elif args.command == "optimize":
        rows = optimize_rows(cfg)
        if not any(r["r2"] is not None for r in rows):
            raise ConfigError("no feasible (q, r1, r2) for any scheme")
        _write(rows, RESULT_COLUMNS, args.format, out)
    elif args.command == "sweep":
        rows, lead = sweep_rows(cfg, args.jobs)
        _write(rows, lead + RESULT_COLUMNS, args.format, out)
    else:
        report = simulate_report(cfg)
        if args.format == "csv":
            flat = [{"scheme": k, **v} for k, v in report["schemes"].items()]
            cols = ["scheme", "r1", "r2", "end_to_end_trials", "distinct_straggler_sets",
                    "all_correct", "schedule_valid", "schedule_delay", "closed_form_delay",
                    "residual"]
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(cols)
            for r in flat:
                writer.writerow([r[c] for c in cols])
        else:
            json.dump(report, out, indent=2)
            out.write("\n")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    buf = io.StringIO()
    try:
        code = run(args, buf)
    except CodedShuffleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        log.exception("internal error")
        return 1
    text = buf.getvalue()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
