"""Command-line interface.

Subcommands:
    run <config.toml>      execute an experiment from a config file
    reproduce <study>      run a pre-baked desk-scale benchmark study
    diagnose <chain.bin>   recompute the metrics of stored chain dumps
    quantile-check         self-test of the chi-square quantile utility

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

from . import harness
from .diagnostics import chisq_log_pdf, chisq_quantile
from .harness import ConfigError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plateau-mtm",
        description="Adaptive component-wise multiple-try Metropolis benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a TOML config")
    run.add_argument("config", help="path to the config file")
    _add_overrides(run)

    rep = sub.add_parser("reproduce", help="run a pre-baked study")
    rep.add_argument("study", choices=harness.PRESET_STUDIES)
    _add_overrides(rep)

    diag = sub.add_parser("diagnose", help="recompute metrics from chain dumps")
    diag.add_argument("chains", nargs="+", help="chain dump files (chains/r<k>.bin)")
    diag.add_argument("--out", help="write the metrics CSV here (default: stdout)")

    sub.add_parser("quantile-check", help="chi-square quantile self-test")
    return parser


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--reps", type=int, help="override the repetition count")
    p.add_argument("--iters", type=int, help="override the iteration count")
    p.add_argument("--workers", type=int, help="override the worker count")
    p.add_argument("--out", help="output directory")


def _apply_overrides(cfg: harness.ExperimentConfig, args) -> harness.ExperimentConfig:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.reps is not None:
        updates["repetitions"] = args.reps
    if args.iters is not None:
        updates["iterations"] = args.iters
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.out is not None:
        updates["output_dir"] = args.out
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _cmd_run(args) -> int:
    cfg = harness.load_config(args.config)
    cfg = _apply_overrides(cfg, args)
    summary = harness.run_experiment(cfg)
    print(f"wrote metrics for {cfg.repetitions} repetitions on "
          f"{cfg.target_name} ({cfg.sampler})")
    _print_metric_medians(summary)
    return 0


def _cmd_reproduce(args) -> int:
    out_root = args.out or f"out-{args.study}"
    configs = harness.preset_configs(
        args.study, seed=args.seed or 0,
        repetitions=args.reps, iterations=args.iters,
    )
    comparison: dict = {"study": args.study, "samplers": {}}
    for label, cfg in configs:
        if args.workers is not None:
            cfg = dataclasses.replace(cfg, workers=args.workers)
        sub_out = f"{out_root}/{label}"
        print(f"[{args.study}] running {label} "
              f"(N={cfg.iterations}, R={cfg.repetitions}, seed={cfg.seed})")
        summary = harness.run_experiment(cfg, output_dir=sub_out)
        comparison["samplers"][label] = {
            metric: {comp: stats.get("median") for comp, stats in by_comp.items()}
            for metric, by_comp in summary["metrics"].items()
        }
    harness._atomic_write(
        f"{out_root}/comparison.json",
        json.dumps(comparison, sort_keys=True, indent=2) + "\n",
    )
    print(f"study outputs under {out_root}/")
    return 0


def _cmd_diagnose(args) -> int:
    all_rows = []
    for path in args.chains:
        _rep, rows = harness.diagnose_chain_file(path)
        all_rows.extend(rows)
    all_rows.sort(key=lambda r: r[0])
    csv_text = harness.rows_to_csv(all_rows)
    if args.out:
        harness._atomic_write(args.out, csv_text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(csv_text)
    return 0


def _chisq_upper_tail(z: float, df: int) -> float:
    """Upper tail probability by numerical integration of the density."""
    from scipy.integrate import quad

    value, _ = quad(lambda t: math.exp(chisq_log_pdf(t, df)), z, math.inf, limit=200)
    return value


def _cmd_quantile_check(_args) -> int:
    cases = [(0.99, 1), (0.99, 5), (0.95, 2), (0.5, 3), (0.975, 10)]
    ok = True
    for p, df in cases:
        z = chisq_quantile(p, df)
        tail = _chisq_upper_tail(z, df)
        err = abs(tail - (1.0 - p))
        status = "ok" if err < 1e-6 else "FAIL"
        ok = ok and err < 1e-6
        print(f"p={p:<6} df={df:<3} quantile={z:.6f} "
              f"upper-tail={tail:.8f} err={err:.2e} {status}")
    closed = -2.0 * math.log(0.05)
    z2 = chisq_quantile(0.95, 2)
    print(f"df=2 closed form -2*ln(0.05) = {closed:.6f} vs {z2:.6f}")
    ok = ok and abs(closed - z2) < 1e-9
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "reproduce":
            return _cmd_reproduce(args)
        if args.command == "diagnose":
            return _cmd_diagnose(args)
        return _cmd_quantile_check(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


def _print_metric_medians(summary: dict) -> None:
    for metric, by_comp in summary["metrics"].items():
        parts = []
        for comp, stats in sorted(by_comp.items()):
            med = stats.get("median")
            parts.append(f"{comp}: {med:.4g}" if med is not None else f"{comp}: absent")
        print(f"  {metric:20s} median {{{', '.join(parts)}}}")


if __name__ == "__main__":
    sys.exit(main())
