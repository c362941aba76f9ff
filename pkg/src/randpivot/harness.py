"""Monte Carlo experiments: coverage tables and Edgeworth-error scaling.

Every replication draws from its own keyed streams (see :mod:`randpivot.rng`)
and results are gathered by replication index, so reports do not depend on
how many worker processes ran them.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import stats

from .bootstrap import BootstrapConfig, block_ci, filtered_sieve_ci, sieve_ci
from .ci import classical_ci, randomized_ci
from .errors import BudgetExceededError, ConfigError, ParameterError, RandPivotError
from .linproc import ProcessSpec, simulate, simulate_batch, theoretical_moments
from .pivot import classical_variance, randomized_variance
from .rng import stream
from .studentize import bandwidth, estimate_memory
from .weights import WeightScheme, gen_weights, gen_weights_batch
from .window import model_window, plugin_window

__all__ = [
    "METHODS", "CSV_HEADER", "PUBLISHED_THETA", "ExperimentConfig", "MethodRow", "CoverageReport",
    "EdgeworthConfig", "ErrorCurve", "coverage_experiment", "pivot_draws",
    "edgeworth_error_experiment", "table_preset", "write_reports", "thread_count",
]

METHODS = ("randomized", "randomized_complete", "classical", "block", "augsieve", "sieve")
_RANDOMIZED = ("randomized", "randomized_complete")
_BOOTSTRAP = {"block": "block", "augsieve": "filtered_sieve", "sieve": "sieve"}
CSV_HEADER = ("method", "n", "coverage", "mean_length", "median_length", "discarded", "seed")

# window constants used for the published tables, keyed by table and n
PUBLISHED_THETA = {
    1: {200: 0.25 + 0.14, 400: 0.25 + 0.1},
    2: {200: 1 - 0.27, 400: 1 + 0.23},
    3: {100: 1 + 0.97, 200: 1 + 0.97},
}


def thread_count() -> int:
    """Worker processes to use: ``RANDPIVOT_THREADS`` if set, else the CPU count."""
    raw = os.environ.get("RANDPIVOT_THREADS", "").strip()
    if raw:
        try:
            k = int(raw)
        except ValueError:
            raise ConfigError(f"RANDPIVOT_THREADS must be an integer, got {raw!r}") from None
        if k < 1:
            raise ConfigError("RANDPIVOT_THREADS must be at least 1")
        return k
    return os.cpu_count() or 1


def _map_ordered(func, tasks: list, threads: int, deadline: Optional[float] = None) -> list:
    """``[func(*t) for t in tasks]``, possibly in worker processes, in task order."""
    def check():
        if deadline is not None and time.monotonic() > deadline:
            raise BudgetExceededError("experiment exceeded its time budget")

    if threads <= 1 or len(tasks) <= 1:
        out = []
        for t in tasks:
            check()
            out.append(func(*t))
        return out
    with ProcessPoolExecutor(max_workers=min(threads, len(tasks))) as pool:
        futures = [pool.submit(func, *t) for t in tasks]
        out = []
        try:
            for f in futures:
                if deadline is None:
                    out.append(f.result())
                else:
                    out.append(f.result(timeout=max(0.0, deadline - time.monotonic())))
        except TimeoutError:
            for f in futures:
                f.cancel()
            raise BudgetExceededError("experiment exceeded its time budget") from None
        return out


def _chunks(total: int, threads: int) -> list:
    size = max(1, math.ceil(total / (4 * max(threads, 1))))
    return [(a, min(a + size, total)) for a in range(0, total, size)]


@dataclass(frozen=True)
class ExperimentConfig:
    """One coverage experiment at a single sample size.

    ``theta_mode`` is ``"model"`` (window root from the known process),
    ``"plugin"`` (root from each sample's plug-in moments) or a fixed float.
    ``memory`` is ``"known"`` (use ``spec.d``) or ``"estimate"`` (local Whittle
    per replication).  ``q`` overrides the ``q_rule`` bandwidth.
    """

    spec: ProcessSpec
    n: int
    scheme: Optional[WeightScheme] = None
    replications: int = 2000
    alpha: float = 0.05
    methods: tuple = ("randomized", "classical")
    seed: int = 0
    q_rule: str = "short"
    q: Optional[int] = None
    theta_mode: Union[str, float] = "model"
    memory: str = "known"
    B: int = 1000
    pmax: Optional[int] = None
    blocklen: Optional[int] = None
    plugin_lag: Optional[int] = None
    time_budget: Optional[float] = None

    def __post_init__(self):
        if self.replications < 100:
            raise ConfigError("replications must be at least 100")
        if self.n < 4:
            raise ConfigError("n must be at least 4")
        if not self.methods:
            raise ConfigError("at least one method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods must not repeat")
        if any(m in _RANDOMIZED for m in self.methods) and self.scheme is None:
            raise ConfigError("randomized intervals need a weight scheme")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.q_rule not in ("short", "long"):
            raise ConfigError(f"q_rule must be 'short' or 'long', got {self.q_rule!r}")
        if self.q is not None and not 1 <= self.q < self.n:
            raise ConfigError("q must lie in [1, n)")
        if isinstance(self.theta_mode, str) and self.theta_mode not in ("model", "plugin"):
            raise ConfigError(f"theta_mode must be 'model', 'plugin' or a number")
        if self.memory not in ("known", "estimate"):
            raise ConfigError("memory must be 'known' or 'estimate'")
        if self.B < 100:
            raise ConfigError("B must be at least 100")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ConfigError("time_budget must be positive")

    def bootstrap_config(self, method: str) -> BootstrapConfig:
        return BootstrapConfig(self.B, _BOOTSTRAP[method], self.pmax, self.blocklen, self.alpha)

    def to_config(self) -> dict:
        """Nested ``process`` / ``weights`` / ``experiment`` sections of strings."""
        exp = {
            "n": str(self.n), "replications": str(self.replications), "alpha": repr(self.alpha),
            "methods": ",".join(self.methods), "seed": str(self.seed), "q_rule": self.q_rule,
            "theta": self.theta_mode if isinstance(self.theta_mode, str) else repr(self.theta_mode),
            "memory": self.memory, "B": str(self.B),
        }
        for key in ("q", "pmax", "blocklen", "plugin_lag", "time_budget"):
            if getattr(self, key) is not None:
                exp[key] = str(getattr(self, key))
        out = {"process": self.spec.to_config(), "experiment": exp}
        if self.scheme is not None:
            out["weights"] = self.scheme.to_config()
        return out

    @classmethod
    def from_config(cls, cfg: dict) -> "ExperimentConfig":
        """Inverse of :meth:`to_config`; raises ``ConfigError`` on bad input."""
        try:
            spec = ProcessSpec.from_config(cfg["process"])
            scheme = WeightScheme.from_config(cfg["weights"]) if cfg.get("weights") else None
            exp = dict(cfg.get("experiment", {}))
            theta = str(exp.pop("theta", "model")).strip()
            kw = dict(
                n=int(exp.pop("n")),
                replications=int(exp.pop("replications", 2000)),
                alpha=float(exp.pop("alpha", 0.05)),
                methods=tuple(m.strip() for m in str(exp.pop("methods", "randomized,classical")).split(",")
                              if m.strip()),
                seed=int(exp.pop("seed", 0)),
                q_rule=str(exp.pop("q_rule", "short")).strip(),
                theta_mode=theta if theta in ("model", "plugin") else float(theta),
                memory=str(exp.pop("memory", "known")).strip(),
                B=int(exp.pop("B", 1000)),
            )
            for key in ("q", "pmax", "blocklen", "plugin_lag"):
                if exp.get(key) not in (None, ""):
                    kw[key] = int(exp.pop(key))
            if exp.get("time_budget") not in (None, ""):
                kw["time_budget"] = float(exp.pop("time_budget"))
            leftover = [k for k, v in exp.items() if v not in (None, "")]
            if leftover:
                raise ConfigError(f"unknown experiment keys {leftover}")
        except KeyError as exc:
            raise ConfigError(f"config is missing {exc}") from None
        except (ValueError, ParameterError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad config value: {exc}") from None
        return cls(spec, scheme=scheme, **kw)


@dataclass
class MethodRow:
    method: str
    coverage: float
    mean_length: float
    median_length: float
    discarded: int


@dataclass
class CoverageReport:
    """Per-method coverage and length summaries.

    ``covered`` holds one row per replication and one column per method
    (1 covered, 0 missed, -1 discarded); ``lengths`` is NaN where discarded.
    """

    config: ExperimentConfig
    rows: list
    theta: Optional[float]
    wall_time: float
    covered: np.ndarray = field(repr=False)
    lengths: np.ndarray = field(repr=False)

    def row(self, method: str) -> MethodRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def coverage_se(self, method: str) -> float:
        p = self.row(method).coverage
        return math.sqrt(p * (1 - p) / self.config.replications)

    def csv_rows(self) -> list:
        c = self.config
        return [[r.method, str(c.n), _fmt(r.coverage), _fmt(r.mean_length),
                 _fmt(r.median_length), str(r.discarded), str(c.seed)] for r in self.rows]


def _fmt(x: float) -> str:
    return "nan" if not math.isfinite(x) else format(x, ".6g")


def write_reports(reports, fh=None) -> str:
    """CSV text (header plus one row per method and report); also written to ``fh``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rep in reports:
        w.writerows(rep.csv_rows())
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def _resolve_theta(cfg: ExperimentConfig) -> Optional[float]:
    if cfg.scheme is None or not any(m in _RANDOMIZED for m in cfg.methods):
        return None
    if not isinstance(cfg.theta_mode, str):
        return float(cfg.theta_mode)
    if cfg.theta_mode == "model":
        return model_window(cfg.spec, cfg.scheme, cfg.n).selected
    return None


def _one_replication(cfg: ExperimentConfig, theta: Optional[float], i: int):
    cov = np.full(len(cfg.methods), -1, dtype=np.int8)
    lens = np.full(len(cfg.methods), np.nan)
    spec, n, mu = cfg.spec, cfg.n, cfg.spec.mu
    x = simulate(spec, n, stream(cfg.seed, i, "data"))
    w = gen_weights(cfg.scheme, n, stream(cfg.seed, i, "weights")) if cfg.scheme else None
    try:
        d = spec.d if cfg.memory == "known" else estimate_memory(x).d_hat
        q = cfg.q if cfg.q is not None else bandwidth(n, d, cfg.q_rule)
    except RandPivotError:
        return cov, lens
    th = theta
    for j, method in enumerate(cfg.methods):
        try:
            if method in _RANDOMIZED:
                if th is None:
                    lag = cfg.plugin_lag if cfg.plugin_lag is not None else q
                    th = plugin_window(x, cfg.scheme, lag).selected
                iv = randomized_ci(x, w, th, cfg.alpha, d, q,
                                   complete=method == "randomized_complete", scheme=cfg.scheme)
            elif method == "classical":
                iv = classical_ci(x, cfg.alpha, d, q)
            else:
                bcfg = cfg.bootstrap_config(method)
                fn = {"block": block_ci, "augsieve": filtered_sieve_ci, "sieve": sieve_ci}[method]
                iv = fn(x, bcfg, stream(cfg.seed, i, "bootstrap"))
        except RandPivotError:
            continue
        cov[j] = int(iv.covers(mu))
        lens[j] = iv.length
    return cov, lens


def _run_chunk(cfg: ExperimentConfig, theta: Optional[float], start: int, stop: int):
    cov = np.empty((stop - start, len(cfg.methods)), dtype=np.int8)
    lens = np.empty((stop - start, len(cfg.methods)))
    for k, i in enumerate(range(start, stop)):
        cov[k], lens[k] = _one_replication(cfg, theta, i)
    return cov, lens


def coverage_experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> CoverageReport:
    """Empirical coverage and lengths of each requested interval.

    Per-replication failures (vanishing weight sum, non-positive studentizer,
    failed fits) count as discarded and as not covering; coverage is over all
    attempted replications.
    """
    t0 = time.monotonic()
    threads = thread_count() if threads is None else threads
    deadline = None if cfg.time_budget is None else t0 + cfg.time_budget
    theta = _resolve_theta(cfg)
    tasks = [(cfg, theta, a, b) for a, b in _chunks(cfg.replications, threads)]
    parts = _map_ordered(_run_chunk, tasks, threads, deadline)
    covered = np.concatenate([p[0] for p in parts])
    lengths = np.concatenate([p[1] for p in parts])
    rows = []
    for j, method in enumerate(cfg.methods):
        ok = covered[:, j] >= 0
        good = lengths[ok, j]
        rows.append(MethodRow(
            method,
            float(np.sum(covered[:, j] == 1)) / cfg.replications,
            float(np.mean(good)) if good.size else math.nan,
            float(np.median(good)) if good.size else math.nan,
            int(np.sum(~ok)),
        ))
    return CoverageReport(cfg, rows, theta, time.monotonic() - t0, covered, lengths)


def table_preset(k: int, replications: int = 2000, seed: int = 20240101,
                 theta_mode: str = "published") -> list:
    """Configurations reproducing one of the three published tables.

    ``theta_mode="published"`` fixes the window constants printed with the
    tables; ``"model"`` solves for them from the known process instead.
    """
    if k not in PUBLISHED_THETA:
        raise ConfigError(f"no preset for table {k}")
    if theta_mode not in ("published", "model", "plugin"):
        raise ConfigError(f"unknown theta mode {theta_mode!r}")
    out = []
    for n, th in PUBLISHED_THETA[k].items():
        theta = th if theta_mode == "published" else theta_mode
        if k == 1:
            out.append(ExperimentConfig(ProcessSpec.ar1(0.8, "lognormal"), n, WeightScheme.bernoulli(0.25),
                                        replications, theta_mode=theta, seed=seed))
        elif k == 2:
            out.append(ExperimentConfig(ProcessSpec.ar1(0.8, "lognormal"), n, WeightScheme.multinomial(),
                                        replications, theta_mode=theta, seed=seed))
        else:
            out.append(ExperimentConfig(ProcessSpec.fid(0.4, "lognormal"), n, WeightScheme.multinomial(),
                                        replications, seed=seed, theta_mode=theta, q_rule="long",
                                        methods=("randomized", "classical", "block", "augsieve", "sieve"),
                                        B=1000))
    return out


@dataclass(frozen=True)
class EdgeworthConfig:
    """Sup-CDF error of the exactly normalized pivots over a grid of ``n``."""

    spec: ProcessSpec
    scheme: WeightScheme
    grid: tuple = (100, 400, 1600)
    replications: int = 100_000
    seed: int = 0
    theta_mode: Union[str, float] = "model"
    batch: int = 10_000

    def __post_init__(self):
        g = tuple(int(v) for v in self.grid)
        if len(g) < 3:
            raise ConfigError("the n grid needs at least 3 points")
        if any(b <= a for a, b in zip(g, g[1:])) or g[0] < 4:
            raise ConfigError("the n grid must be strictly increasing and start at n >= 4")
        if not self.spec.short_memory:
            raise ConfigError("the error-scaling experiment needs a short-memory process")
        if self.replications < 1000:
            raise ConfigError("replications must be at least 1000")
        if self.batch < 1:
            raise ConfigError("batch must be positive")
        if isinstance(self.theta_mode, str) and self.theta_mode != "model":
            raise ConfigError("theta_mode must be 'model' or a number")


@dataclass
class ErrorCurve:
    grid: np.ndarray
    theta: np.ndarray
    distance: dict
    slope: dict
    third_moment: dict
    third_moment_se: dict

    def plot_rows(self) -> list:
        """``(kind, n, distance)`` rows for external plotting."""
        return [(kind, int(n), float(v)) for kind, vals in self.distance.items()
                for n, v in zip(self.grid, vals)]


def _pivot_block(spec, scheme, theta, n, size, seed, index, var_c, var_r):
    x = simulate_batch(spec, n, size, stream(seed, index, "data")) - spec.mu
    w = gen_weights_batch(scheme, n, size, stream(seed, index, "weights"))
    tc = x.sum(axis=1) / math.sqrt(var_c)
    tr = np.einsum("ij,ij->i", w - theta, x) / math.sqrt(var_r)
    return tc, tr


def pivot_draws(spec: ProcessSpec, scheme: WeightScheme, theta: float, n: int, replications: int,
                seed: int, batch: int = 10_000, offset: int = 0, threads: Optional[int] = None):
    """Monte Carlo draws of the classical and randomized pivots with exact normalizers.

    Block ``b`` uses the streams keyed ``offset + b``, so draws depend only on
    the seed and block size.
    """
    gamma = theoretical_moments(spec, n, Lpair=0).gamma
    var_c = classical_variance(gamma, n)
    var_r = randomized_variance(scheme, theta, gamma, n)
    threads = thread_count() if threads is None else threads
    tasks = []
    for b, start in enumerate(range(0, replications, batch)):
        size = min(batch, replications - start)
        tasks.append((spec, scheme, theta, n, size, seed, offset + b, var_c, var_r))
    parts = _map_ordered(_pivot_block, tasks, threads)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def edgeworth_error_experiment(cfg: EdgeworthConfig, threads: Optional[int] = None) -> ErrorCurve:
    """Sup distance to the normal law and log-log slope for both pivots."""
    grid = np.asarray(cfg.grid, dtype=int)
    kinds = ("classical", "randomized")
    dist = {k: np.empty(grid.size) for k in kinds}
    m3 = {k: np.empty(grid.size) for k in kinds}
    m3se = {k: np.empty(grid.size) for k in kinds}
    thetas = np.empty(grid.size)
    nblocks = math.ceil(cfg.replications / cfg.batch)
    for g, n in enumerate(grid):
        if isinstance(cfg.theta_mode, str):
            thetas[g] = model_window(cfg.spec, cfg.scheme, int(n)).selected
        else:
            thetas[g] = float(cfg.theta_mode)
        draws = pivot_draws(cfg.spec, cfg.scheme, thetas[g], int(n), cfg.replications, cfg.seed,
                            cfg.batch, offset=g * nblocks, threads=threads)
        for k, t in zip(kinds, draws):
            dist[k][g] = stats.kstest(t, "norm").statistic
            cube = t**3
            m3[k][g] = cube.mean()
            m3se[k][g] = cube.std(ddof=1) / math.sqrt(t.size)
    logn = np.log(grid)
    slope = {k: float(np.polyfit(logn, np.log(dist[k]), 1)[0]) for k in kinds}
    return ErrorCurve(grid, thetas, dist, slope, m3, m3se)
