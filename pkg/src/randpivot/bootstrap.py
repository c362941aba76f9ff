"""Bootstrap baselines for the mean: sieve, filtered sieve and moving blocks.

All three return percentile intervals built from ``B`` bootstrap means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import signal

from .ci import Interval
from .errors import FitError, ParameterError
from .linproc import Series
from .rng import as_generator
from .studentize import estimate_memory

__all__ = ["BootstrapConfig", "ARFit", "fit_ar", "frac_diff_coefficients", "sieve_ci",
           "filtered_sieve_ci", "block_ci", "percentile_interval"]


@dataclass(frozen=True)
class BootstrapConfig:
    """Resampling settings.

    ``pmax`` defaults to ``ceil(10 log10 n)`` and ``blocklen`` to ``ceil(sqrt n)``.
    """

    B: int = 1000
    method: str = "sieve"
    pmax: Optional[int] = None
    blocklen: Optional[int] = None
    alpha: float = 0.05

    def __post_init__(self):
        if self.B < 100:
            raise ParameterError("B must be at least 100")
        if self.method not in ("sieve", "filtered_sieve", "block"):
            raise ParameterError(f"unknown bootstrap method {self.method!r}")
        if self.pmax is not None and self.pmax < 1:
            raise ParameterError("pmax must be at least 1")
        if self.blocklen is not None and self.blocklen < 1:
            raise ParameterError("blocklen must be at least 1")
        if not 0 < self.alpha < 1:
            raise ParameterError("alpha must lie in (0, 1)")

    def pmax_for(self, n: int) -> int:
        return self.pmax if self.pmax is not None else math.ceil(10 * math.log10(n))

    def blocklen_for(self, n: int) -> int:
        return self.blocklen if self.blocklen is not None else math.ceil(math.sqrt(n))


@dataclass(frozen=True)
class ARFit:
    phi: np.ndarray
    residuals: np.ndarray
    sigma2: float
    aic: float

    @property
    def order(self) -> int:
        return self.phi.size


def _ols_ar(x: np.ndarray, p: int, start: int):
    # regress x_t on x_{t-1..t-p} for t = start..n-1
    n = x.size
    Z = np.column_stack([x[start - j : n - j] for j in range(1, p + 1)])
    y = x[start:]
    phi, *_ = np.linalg.lstsq(Z, y, rcond=None)
    resid = y - Z @ phi
    return phi, resid


def fit_ar(x, pmax: int) -> ARFit:
    """Least-squares AR(p) fit to a mean-zero series, ``p`` chosen by AIC on ``1..pmax``.

    Orders are compared on the common sample ``t > pmax``; the chosen order
    is refitted on all available observations.  Raises ``FitError`` for
    constant input or a non-stationary fit.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if pmax < 1 or n <= 2 * pmax:
        raise ParameterError(f"sieve needs n > 2 pmax, got n={n}, pmax={pmax}")
    if np.ptp(x) == 0:
        raise FitError("cannot fit an autoregression to a constant series")
    n_eff = n - pmax
    best = None
    for p in range(1, pmax + 1):
        _, resid = _ols_ar(x, p, pmax)
        s2 = float(resid @ resid) / n_eff
        if s2 <= 0:
            raise FitError("autoregression fits the data exactly")
        aic = n_eff * math.log(s2) + 2 * p
        if best is None or aic < best[0]:
            best = (aic, p)
    aic, p = best
    phi, resid = _ols_ar(x, p, p)
    companion = np.zeros((p, p))
    companion[0] = phi
    companion[1:, :-1] = np.eye(p - 1)
    if np.max(np.abs(np.linalg.eigvals(companion))) >= 1:
        raise FitError(f"fitted AR({p}) is not stationary")
    return ARFit(phi, resid, float(resid @ resid) / resid.size, aic)


def frac_diff_coefficients(d: float, length: int) -> np.ndarray:
    """First ``length`` coefficients of ``(1 - B)^d``; use ``-d`` to invert."""
    c = np.ones(length)
    if length > 1:
        k = np.arange(1, length)
        c[1:] = np.cumprod((k - 1 - d) / k)
    return c


def percentile_interval(means: np.ndarray, alpha: float, method: str, diag: dict) -> Interval:
    lo, hi = np.quantile(means, [alpha / 2, 1 - alpha / 2], method="inverted_cdf")
    return Interval(float(lo), float(hi), alpha, method, diag)


def _sieve_paths(u: np.ndarray, cfg: BootstrapConfig, rng: np.random.Generator, n: int):
    fit = fit_ar(u, cfg.pmax_for(u.size))
    eps = fit.residuals - fit.residuals.mean()
    burn = max(100, 10 * fit.order)
    draws = eps[rng.integers(0, eps.size, size=(cfg.B, n + burn))]
    paths = signal.lfilter([1.0], np.concatenate(([1.0], -fit.phi)), draws, axis=1)[:, burn:]
    return paths, fit


def _values(series) -> np.ndarray:
    return series.values if isinstance(series, Series) else np.asarray(series, dtype=float)


def sieve_ci(series, cfg: BootstrapConfig, seed) -> Interval:
    """Residual-resampling AR sieve bootstrap interval for the mean."""
    x = _values(series)
    rng = as_generator(seed)
    xbar = float(x.mean())
    paths, fit = _sieve_paths(x - xbar, cfg, rng, x.size)
    means = xbar + paths.mean(axis=1)
    return percentile_interval(means, cfg.alpha, "sieve", {"B": cfg.B, "p": fit.order})


def filtered_sieve_ci(series, cfg: BootstrapConfig, seed, d_hat: Optional[float] = None) -> Interval:
    """Sieve bootstrap on the fractionally differenced series, re-integrated afterwards.

    The series is filtered with ``(1 - B)^d_hat`` truncated at lag ``n-1``, the
    raw sieve generates bootstrap versions of the filtered series, and each is
    re-integrated with ``(1 - B)^(-d_hat)``.  ``d_hat`` defaults to the local
    Whittle estimate.
    """
    x = _values(series)
    n = x.size
    rng = as_generator(seed)
    if d_hat is None:
        d_hat = estimate_memory(x).d_hat
    xbar = float(x.mean())
    u = signal.lfilter(frac_diff_coefficients(d_hat, n), [1.0], x - xbar)
    u_paths, fit = _sieve_paths(u - u.mean(), cfg, rng, n)
    paths = signal.lfilter(frac_diff_coefficients(-d_hat, n), [1.0], u_paths, axis=1)
    means = xbar + paths.mean(axis=1)
    return percentile_interval(means, cfg.alpha, "augsieve",
                               {"B": cfg.B, "p": fit.order, "d_hat": float(d_hat)})


def block_ci(series, cfg: BootstrapConfig, seed) -> Interval:
    """Moving-block bootstrap interval for the mean."""
    x = _values(series)
    n = x.size
    ell = cfg.blocklen_for(n)
    if ell > n:
        raise ParameterError(f"block length {ell} exceeds n={n}")
    rng = as_generator(seed)
    nb = math.ceil(n / ell)
    starts = rng.integers(0, n - ell + 1, size=(cfg.B, nb))
    idx = (starts[:, :, None] + np.arange(ell)).reshape(cfg.B, nb * ell)[:, :n]
    means = x[idx].mean(axis=1)
    return percentile_interval(means, cfg.alpha, "block", {"B": cfg.B, "blocklen": ell})
