"""Command line entry point: ``cbe-pairstats <subcommand> [options]``.

Subcommands
    sample      draw eigenphases and dump them as ``trial,index,phase``
    pairsum     pair statistic of one draw, by the direct and spectral routes
    exact       finite-N mean and variance of S_N for the CUE
    cumulant    exact joint cumulant of CUE traces
    limit       limit-law variance (and optional draws) for a regime
    experiment  Monte Carlo moment and distribution gates from a config
    suite       exact consistency gates

The exit status is 0 exactly when every gate that ran passed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from .cumulants import trace_cumulant
from .exact import asymptotic_variance, expected_pair_sum, variance_pair_sum
from .functions import circle_coeffs, line_transform, scaled_coeffs
from .harness import (
    ConfigError,
    ExperimentConfig,
    all_gates_pass,
    reports_to_csv,
    run_consistency_suite,
    run_distribution_experiment,
    run_moment_experiment,
    sample_phases,
    statistic_values,
    summary_dict,
    write_raw_phases,
    write_reports_csv,
    write_summary_json,
)
from .limits import exp_series_law, logsine_variance, meso_variance, micro_variance
from .pairstats import pair_sum_direct, pair_sum_spectral, traces
from .sampler import SeedSpec, sample_cbeta

DEFAULT_FUNCTION = '{"kind": "trigpoly", "coeffs": [[1, 1.0]]}'


def _common(p: argparse.ArgumentParser, *, trials: bool = False) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment config; flags override its fields")
    p.add_argument("--n", type=int, help="number of eigenvalues")
    p.add_argument("--beta", type=float, help="inverse temperature (default 2)")
    p.add_argument("--regime", choices=("global", "meso", "micro"))
    p.add_argument("--l-n", dest="l_n", help="scale: a number, 'n', 'n^a' or 'log'")
    p.add_argument("--function", help="function spec as JSON (default 2cos(theta))")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    if trials:
        p.add_argument("--trials", type=int)
        p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cbe-pairstats", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw eigenphases")
    _common(p, trials=True)

    p = sub.add_parser("pairsum", help="pair statistic of one draw")
    _common(p)
    p.add_argument("--trial", type=int, default=0, help="trial index for the seed")

    p = sub.add_parser("exact", help="exact CUE mean and variance")
    _common(p)

    p = sub.add_parser("cumulant", help="exact joint cumulant of traces")
    p.add_argument("--ks", required=True, help="comma separated frequencies, e.g. 3,-3")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("limit", help="limit-law variance")
    _common(p)
    p.add_argument("--draws", type=int, default=0, help="also print this many limit draws")

    p = sub.add_parser("experiment", help="Monte Carlo gates")
    _common(p, trials=True)
    p.add_argument("--no-distribution", action="store_true", help="skip the KS gate")
    p.add_argument("--dump-phases", action="store_true", help="also write raw phases")

    p = sub.add_parser("suite", help="exact consistency gates")
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _config(args, *, need_trials: bool = True) -> ExperimentConfig:
    base = {}
    if getattr(args, "config", None) is not None:
        base = json.loads(Path(args.config).read_text())
    overrides = {
        "n": args.n,
        "beta": args.beta,
        "regime": args.regime,
        "l_n": args.l_n,
        "master_seed": args.seed,
        "function": json.loads(args.function) if args.function else None,
        "trials": getattr(args, "trials", None),
        "workers": getattr(args, "workers", None),
        "out_dir": None if args.out is None else str(args.out),
    }
    if "function" not in base and overrides["function"] is None:
        overrides["function"] = json.loads(DEFAULT_FUNCTION)
    if not need_trials and base.get("trials") is None and overrides["trials"] is None:
        overrides["trials"] = 2
    if "n" not in base and args.n is None:
        raise ConfigError("--n is required (or an 'n' field in --config)")
    return ExperimentConfig.from_dict(base, overrides)


def _emit(payload: dict, fmt: str, stream=None) -> None:
    stream = stream or sys.stdout
    if fmt == "json":
        stream.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        keys = list(payload)
        stream.write(",".join(keys) + "\n")
        stream.write(",".join(_cell(payload[k]) for k in keys) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v + 0.0)  # no negative zeros in tables
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _series(cfg: ExperimentConfig):
    if cfg.function.domain == "circle":
        return circle_coeffs(cfg.function, cfg.k_max)
    return scaled_coeffs(line_transform(cfg.function), cfg.l_n, cfg.k_max)


# ---------------------------------------------------------------------------


def cmd_sample(args) -> int:
    cfg = _config(args)
    phases = sample_phases(cfg.n, cfg.beta, cfg.trials, cfg.master_seed, workers=cfg.workers, sampler=cfg.sampler)
    if cfg.out_dir:
        path = write_raw_phases(phases, Path(cfg.out_dir) / "phases.csv")
        print(path)
    else:
        sys.stdout.write("trial,index,phase\n")
        for t, row in enumerate(phases):
            sys.stdout.writelines(f"{t},{j},{p:.17g}\n" for j, p in enumerate(row))
    return 0


def cmd_pairsum(args) -> int:
    cfg = _config(args, need_trials=False)
    phases = sample_cbeta(cfg.n, cfg.beta, SeedSpec(cfg.master_seed, args.trial))
    payload = {"n": cfg.n, "beta": cfg.beta, "l_n": cfg.l_n,
               "direct": pair_sum_direct(phases, cfg.function, cfg.l_n).value}
    if cfg.function.kind != "logsine":
        series = _series(cfg)
        payload["spectral"] = pair_sum_spectral(traces(phases, series.k_max), series).value
    _emit(payload, args.format)
    return 0


def cmd_exact(args) -> int:
    cfg = _config(args, need_trials=False)
    if cfg.beta != 2:
        raise ConfigError("exact finite-N formulas exist for beta = 2 only")
    series = _series(cfg)
    br = variance_pair_sum(series, cfg.n)
    payload = {"n": cfg.n, "l_n": cfg.l_n, "mean": expected_pair_sum(series, cfg.n), "variance": br.total,
               "leading": br.leading, "tail_quadratic": br.tail_quadratic, "tail_linear": br.tail_linear,
               "cross_band": br.cross_band, "cross_overflow": br.cross_overflow}
    if cfg.regime == "global":
        payload["asymptotic_variance"] = asymptotic_variance(series)
    _emit(payload, args.format)
    return 0


def cmd_cumulant(args) -> int:
    ks = [int(k) for k in args.ks.split(",") if k.strip()]
    value = trace_cumulant(ks, args.n)
    _emit({"ks": " ".join(map(str, ks)), "n": args.n, "exact": str(value), "decimal": float(value)}, args.format)
    return 0


def cmd_limit(args) -> int:
    cfg = _config(args, need_trials=False)
    payload = {"regime": cfg.regime, "beta": cfg.beta}
    if cfg.function.kind == "logsine":
        payload["law"] = "gaussian"
        payload["variance"] = logsine_variance(cfg.beta)
        law = None
    elif cfg.regime == "global":
        law = exp_series_law(_series(cfg), cfg.beta)
        payload["law"] = "exp_series"
        payload["variance"] = law.variance
    else:
        lt = line_transform(cfg.function)
        payload["law"] = "gaussian"
        payload["variance"] = meso_variance(lt, cfg.beta) if cfg.regime == "meso" else micro_variance(lt)
        law = None
    _emit(payload, args.format)
    if args.draws:
        rng = SeedSpec(cfg.master_seed, 0).generator()
        draws = law.sample(args.draws, rng) if law is not None else rng.normal(0, math.sqrt(payload["variance"]), args.draws)
        sys.stdout.writelines(f"{x:.17g}\n" for x in draws)
    return 0


def cmd_experiment(args) -> int:
    cfg = _config(args)
    phases = sample_phases(cfg.n, cfg.beta, cfg.trials, cfg.master_seed, workers=cfg.workers, sampler=cfg.sampler)
    values = statistic_values(cfg, phases)
    reports = run_moment_experiment(cfg, values=values)
    if not args.no_distribution:
        reports.append(run_distribution_experiment(cfg, values=values))
    _write(reports, args, cfg)
    if cfg.out_dir and args.dump_phases:
        write_raw_phases(phases, Path(cfg.out_dir) / "phases.csv")
    return 0 if all_gates_pass(reports) else 1


def cmd_suite(args) -> int:
    reports = run_consistency_suite()
    _write(reports, args, None)
    return 0 if all_gates_pass(reports) else 1


def _write(reports, args, cfg) -> None:
    if args.out is not None:
        write_reports_csv(reports, Path(args.out) / "reports.csv")
        write_summary_json(reports, Path(args.out) / "summary.json", cfg)
    if args.format == "json":
        sys.stdout.write(json.dumps(summary_dict(reports, cfg), indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(reports_to_csv(reports))


COMMANDS = {
    "sample": cmd_sample,
    "pairsum": cmd_pairsum,
    "exact": cmd_exact,
    "cumulant": cmd_cumulant,
    "limit": cmd_limit,
    "experiment": cmd_experiment,
    "suite": cmd_suite,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
