"""Command-line interface: ``randpivot <subcommand> ...``.

Exit codes: 0 success, 1 data error, 2 configuration error, 3 time budget exceeded.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import json
import os
import sys
from pathlib import Path

from .bootstrap import BootstrapConfig, block_ci, filtered_sieve_ci, sieve_ci
from .ci import CSV_FIELDS, classical_ci, randomized_ci
from .errors import BudgetExceededError, ConfigError, ParameterError, RandPivotError
from .harness import (EdgeworthConfig, ExperimentConfig, coverage_experiment,
                      edgeworth_error_experiment, table_preset, write_reports)
from .linproc import ProcessSpec, Series, simulate
from .rng import stream
from .studentize import bandwidth
from .weights import WeightScheme, gen_weights
from .window import model_window, plugin_window

__all__ = ["main", "build_parser", "load_config"]

_PROCESS_KEYS = {"process": "kind", "phi": "phi", "d": "d", "coeffs": "coeffs",
                 "innovation": "innovation", "mu": "mu"}
_EXPERIMENT_KEYS = ("n", "replications", "alpha", "methods", "seed", "q_rule", "q", "theta",
                    "memory", "B", "pmax", "blocklen", "plugin_lag", "time_budget")


def load_config(path) -> dict:
    """Read a JSON or INI config into ``{section: {key: str}}``.

    INI files use the sections ``[process]``, ``[weights]`` and ``[experiment]``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON in {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object of sections")
        return {sec: {k: str(v) for k, v in (vals or {}).items()} for sec, vals in raw.items()}
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"bad config file {path}: {exc}") from None
    return {sec: dict(parser[sec]) for sec in parser.sections()}


def _add_process(p):
    g = p.add_argument_group("process")
    g.add_argument("--process", choices=("ar1", "fid", "ma", "white"))
    g.add_argument("--phi", type=float)
    g.add_argument("--d", dest="proc_d", type=float, help="memory parameter of an FI(d) process")
    g.add_argument("--coeffs", help="comma-separated MA coefficients")
    g.add_argument("--innovation", choices=("lognormal", "normal"))
    g.add_argument("--mu", type=float)


def _add_weights(p):
    g = p.add_argument_group("weights")
    g.add_argument("--weights", choices=("bernoulli", "multinomial"))
    g.add_argument("--p", type=float, help="Bernoulli success probability")


def _sections(args) -> dict:
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    proc = dict(cfg.get("process", {}))
    for flag, key in _PROCESS_KEYS.items():
        val = getattr(args, "proc_d" if flag == "d" else flag, None)
        if val is not None:
            proc[key] = str(val)
    weights = dict(cfg.get("weights", {}))
    if getattr(args, "weights", None):
        weights["kind"] = args.weights
    if getattr(args, "p", None) is not None:
        weights["p"] = str(args.p)
    exp = dict(cfg.get("experiment", {}))
    for key in _EXPERIMENT_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            exp[key] = str(val)
    return {"process": proc, "weights": weights, "experiment": exp}


def _spec(sections) -> ProcessSpec:
    if not sections["process"]:
        raise ConfigError("a process is required (--process or a [process] section)")
    try:
        return ProcessSpec.from_config(sections["process"])
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None


def _scheme(sections, required=True):
    if not sections["weights"]:
        if required:
            raise ConfigError("weights are required (--weights or a [weights] section)")
        return None
    try:
        return WeightScheme.from_config(sections["weights"])
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _emit(text: str, path) -> None:
    fh, close = _open_out(path)
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()


def _read_series(path) -> Series:
    try:
        return Series.from_csv(path)
    except OSError as exc:
        raise ConfigError(f"cannot read series {path}: {exc}") from None


def _theta_arg(raw):
    if raw is None:
        return None
    if raw in ("model", "plugin"):
        return raw
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"theta must be 'model', 'plugin' or a number, got {raw!r}") from None


def cmd_simulate(args) -> int:
    sections = _sections(args)
    spec = _spec(sections)
    n = args.n if args.n is not None else int(sections["experiment"].get("n", 0))
    if n < 2:
        raise ConfigError("--n must be at least 2")
    series = simulate(spec, n, args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x"])
    w.writerows([[repr(float(v))] for v in series.values])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_window(args) -> int:
    sections = _sections(args)
    scheme = _scheme(sections)
    policy = args.policy
    if args.input:
        series = _read_series(args.input)
        lag = args.lag if args.lag is not None else bandwidth(series.n)
        sol = plugin_window(series, scheme, lag, policy)
    else:
        spec = _spec(sections)
        n = args.n if args.n is not None else int(sections["experiment"].get("n", 0))
        if n < 4:
            raise ConfigError("--n must be at least 4 in model mode")
        sol = model_window(spec, scheme, n, policy)
    _emit(json.dumps(sol.to_record(), indent=2) + "\n", args.out)
    return 0


def cmd_ci(args) -> int:
    sections = _sections(args)
    series = _read_series(args.input)
    n = series.n
    d = args.memory_d
    q = args.q if args.q is not None else bandwidth(n, d, args.q_rule)
    if args.method in ("randomized", "randomized_complete"):
        scheme = _scheme(sections)
        w = gen_weights(scheme, n, stream(args.seed, 0, "weights"))
        theta = _theta_arg(args.theta) if args.theta is not None else "plugin"
        if theta == "model":
            raise ConfigError("model-mode theta needs the process; use a number or 'plugin'")
        if theta == "plugin":
            theta = plugin_window(series, scheme, args.lag if args.lag is not None else q).selected
        iv = randomized_ci(series, w, theta, args.alpha, d, q,
                           complete=args.method == "randomized_complete", scheme=scheme)
    elif args.method == "classical":
        iv = classical_ci(series, args.alpha, d, q)
    else:
        method = {"block": "block", "augsieve": "filtered_sieve", "sieve": "sieve"}[args.method]
        bcfg = BootstrapConfig(args.B, method, args.pmax, args.blocklen, args.alpha)
        fn = {"block": block_ci, "augsieve": filtered_sieve_ci, "sieve": sieve_ci}[args.method]
        iv = fn(series, bcfg, stream(args.seed, 0, "bootstrap"))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    w.writerow(iv.to_csv_row(args.true_mean))
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_coverage(args) -> int:
    sections = _sections(args)
    if not sections["weights"]:
        sections.pop("weights")
    cfg = ExperimentConfig.from_config(sections)
    report = coverage_experiment(cfg, threads=args.threads)
    _emit(write_reports([report]), args.out)
    return 0


def cmd_edgeworth(args) -> int:
    sections = _sections(args)
    spec, scheme = _spec(sections), _scheme(sections)
    try:
        grid = tuple(int(v) for v in args.grid.split(","))
    except ValueError:
        raise ConfigError(f"bad --grid {args.grid!r}") from None
    theta = _theta_arg(args.theta) or "model"
    cfg = EdgeworthConfig(spec, scheme, grid, args.replications, args.seed, theta)
    curve = edgeworth_error_experiment(cfg, threads=args.threads)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "n", "theta", "distance", "third_moment", "third_moment_se", "slope"])
    for kind in curve.distance:
        for g, n in enumerate(curve.grid):
            w.writerow([kind, int(n), format(curve.theta[g], ".8g"),
                        format(curve.distance[kind][g], ".6g"),
                        format(curve.third_moment[kind][g], ".6g"),
                        format(curve.third_moment_se[kind][g], ".6g"),
                        format(curve.slope[kind], ".6g")])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_table(args) -> int:
    configs = table_preset(args.k, args.replications, args.seed, args.theta_mode)
    if args.time_budget is not None:
        configs = [dataclasses.replace(c, time_budget=args.time_budget) for c in configs]
    reports = [coverage_experiment(c, threads=args.threads) for c in configs]
    _emit(write_reports(reports), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randpivot",
                                     description="Randomized confidence intervals for the mean.")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker processes (default: RANDPIVOT_THREADS or CPU count)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a series to CSV")
    _add_process(p)
    p.add_argument("--config")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("window", help="solve for the window constant")
    _add_process(p)
    _add_weights(p)
    p.add_argument("--config")
    p.add_argument("--n", type=int)
    p.add_argument("--input", help="series CSV; switches to plug-in moments")
    p.add_argument("--lag", type=int, help="plug-in lag cap (default: short-memory bandwidth)")
    p.add_argument("--policy", default="max_distance", choices=("max_distance", "nearest"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_window)

    p = sub.add_parser("ci", help="confidence interval for the mean of a series CSV")
    _add_weights(p)
    p.add_argument("--config")
    p.add_argument("--input", required=True)
    p.add_argument("--method", default="randomized",
                   choices=("randomized", "randomized_complete", "classical", "block", "augsieve", "sieve"))
    p.add_argument("--theta", help="number or 'plugin' (default)")
    p.add_argument("--lag", type=int)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--memory-d", type=float, default=0.0, help="memory exponent d used for scaling")
    p.add_argument("--q", type=int)
    p.add_argument("--q-rule", default="short", choices=("short", "long"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--B", type=int, default=1000)
    p.add_argument("--pmax", type=int)
    p.add_argument("--blocklen", type=int)
    p.add_argument("--true-mean", type=float, help="report whether the interval covers this value")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("coverage", help="Monte Carlo coverage experiment")
    _add_process(p)
    _add_weights(p)
    p.add_argument("--config")
    p.add_argument("--n", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--methods")
    p.add_argument("--seed", type=int)
    p.add_argument("--q-rule", dest="q_rule", choices=("short", "long"))
    p.add_argument("--q", type=int)
    p.add_argument("--theta")
    p.add_argument("--memory", choices=("known", "estimate"))
    p.add_argument("--B", type=int)
    p.add_argument("--pmax", type=int)
    p.add_argument("--blocklen", type=int)
    p.add_argument("--plugin-lag", dest="plugin_lag", type=int)
    p.add_argument("--time-budget", dest="time_budget", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("edgeworth", help="sup-CDF error scaling of both pivots")
    _add_process(p)
    _add_weights(p)
    p.add_argument("--config")
    p.add_argument("--grid", default="100,400,1600")
    p.add_argument("--replications", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta")
    p.add_argument("--out", help="plot-ready CSV")
    p.set_defaults(func=cmd_edgeworth)

    p = sub.add_parser("table", help="reproduce a published coverage table")
    p.add_argument("k", type=int, choices=(1, 2, 3))
    p.add_argument("--replications", type=int, default=2000)
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--theta-mode", default="published", choices=("published", "model", "plugin"))
    p.add_argument("--time-budget", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be at least 1")
    if args.threads is None and os.environ.get("RANDPIVOT_THREADS"):
        try:
            args.threads = int(os.environ["RANDPIVOT_THREADS"])
        except ValueError:
            print("randpivot: RANDPIVOT_THREADS must be an integer", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"randpivot: configuration error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceededError as exc:
        print(f"randpivot: {exc}", file=sys.stderr)
        return 3
    except RandPivotError as exc:
        print(f"randpivot: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
