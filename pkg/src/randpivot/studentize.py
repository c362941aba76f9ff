"""Data-driven studentizers, studentized pivots and memory estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from .errors import DegenerateStudentizerError, EstimationError, ParameterError
from .linproc import Series, lagged_dot, sample_autocov
from .weights import WeightScheme, pattern_moments

__all__ = ["HacEstimate", "MemoryEstimate", "bandwidth", "bartlett_sum", "hac_classical",
           "hac_partial", "hac_complete", "studentized_randomized", "studentized_classical",
           "estimate_memory"]


@dataclass(frozen=True)
class HacEstimate:
    """A studentizer ``q^(-2d) S`` with the bandwidth and memory exponent used."""

    value: float
    q: int
    d_used: float
    kind: str


@dataclass(frozen=True)
class MemoryEstimate:
    d_hat: float
    m: int
    method: str = "local_whittle"
    clamped: bool = False


def _values(series) -> np.ndarray:
    return series.values if isinstance(series, Series) else np.asarray(series, dtype=float)


def bandwidth(n: int, d: float = 0.0, regime: str = "short") -> int:
    """``ceil(n^(1/3))`` (short memory) or ``ceil(n^(1/2-d))`` (long memory), capped at ``ceil(sqrt n)``."""
    if n < 4:
        raise ParameterError("bandwidth rules need n >= 4")
    if regime == "short":
        expo = 1.0 / 3.0
    elif regime == "long":
        expo = 0.5 - d
    else:
        raise ParameterError(f"unknown bandwidth regime {regime!r}")
    # guard against n**(1/3) landing a hair above an integer
    q = math.ceil(n**expo - 1e-9)
    cap = math.ceil(math.sqrt(n) - 1e-9)
    return max(1, min(q, cap, n - 1))


def _check(gammabar, q: int) -> np.ndarray:
    g = np.asarray(gammabar, dtype=float)
    if q < 1:
        raise ParameterError("bandwidth q must be at least 1")
    if g.size < q + 1:
        raise ParameterError(f"need sample autocovariances up to lag {q}, got {g.size - 1}")
    return g


def bartlett_sum(gammabar, q: int) -> float:
    """``gamma_0 + 2 sum_{h=1}^q (1 - h/q) gamma_h``."""
    g = _check(gammabar, q)
    h = np.arange(1, q + 1)
    return float(g[0] + 2 * np.sum((1 - h / q) * g[1 : q + 1]))


def _positive(value: float, q: int, d: float, kind: str) -> HacEstimate:
    if not value > 0:
        raise DegenerateStudentizerError(f"{kind} studentizer is not positive ({value:.3g})")
    return HacEstimate(float(value), int(q), float(d), kind)


def hac_classical(gammabar, q: int, d: float = 0.0) -> HacEstimate:
    return _positive(q ** (-2 * d) * bartlett_sum(gammabar, q), q, d, "classical")


def hac_partial(gammabar, scheme: WeightScheme, theta: float, q: int, d: float = 0.0,
                n: Optional[int] = None) -> HacEstimate:
    """Bartlett studentizer scaled by the exact weight moments.

    ``q^(-2d) [E(w-theta)^2 g_0 + 2 E((w_1-theta)(w_2-theta)) sum (1-h/q) g_h]``.
    ``n`` is only needed for multinomial weights whose scheme does not carry it.
    """
    g = _check(gammabar, q)
    pm = pattern_moments(scheme, theta, n)
    h = np.arange(1, q + 1)
    core = pm.m2 * g[0] + 2 * pm.m2cross * np.sum((1 - h / q) * g[1 : q + 1])
    return _positive(q ** (-2 * d) * core, q, d, "partial_randomized")


def hac_complete(gammabar, weights, theta: float, q: int, d: float = 0.0) -> HacEstimate:
    """Studentizer built from the realized weights.

    ``q^(-2d) [mean((w-theta)^2) g_0 + (2/q) sum_h g_h sum_{j<=q-h} u_j u_{j+h}]``
    with ``u = w - theta``.  The cross sum only uses the first ``q`` weights.
    """
    g = _check(gammabar, q)
    u = np.asarray(weights, dtype=float) - theta
    if u.size < q:
        raise ParameterError("need at least q weights")
    cross = lagged_dot(u[:q], u[:q], q)
    core = np.mean(u * u) * g[0] + 2.0 / q * np.dot(g[1 : q + 1], cross[1 : q + 1])
    return _positive(q ** (-2 * d) * core, q, d, "complete_randomized")


def studentized_randomized(series, weights, theta: float, mu: float, d: float, q: int,
                           complete: bool = False, scheme: Optional[WeightScheme] = None) -> float:
    """``n^(-1/2-d) sum (w_i-theta)(X_i-mu) / sqrt(studentizer)``."""
    x = _values(series)
    w = np.asarray(weights, dtype=float)
    n = x.size
    g = sample_autocov(x, q)
    if complete:
        st = hac_complete(g, w, theta, q, d)
    else:
        if scheme is None:
            raise ParameterError("partial studentization needs the weight scheme")
        st = hac_partial(g, scheme, theta, q, d, n=n)
    return float(n ** (-0.5 - d) * np.sum((w - theta) * (x - mu)) / math.sqrt(st.value))


def studentized_classical(series, mu: float, d: float, q: int) -> float:
    x = _values(series)
    n = x.size
    st = hac_classical(sample_autocov(x, q), q, d)
    return float(n ** (0.5 - d) * (x.mean() - mu) / math.sqrt(st.value))


def _whittle_objective(d: float, lam: np.ndarray, I: np.ndarray, mean_log_lam: float) -> float:
    return math.log(np.mean(lam ** (2 * d) * I)) - 2 * d * mean_log_lam


def estimate_memory(series, upper: float = 0.499) -> MemoryEstimate:
    """Local Whittle estimate of ``d`` over the first ``floor(n^0.65)`` Fourier frequencies.

    The estimate is constrained to ``[0, upper]``; ``clamped`` is set when it
    lands on the upper bound (e.g. trending input).
    """
    x = _values(series)
    n = x.size
    if n < 64:
        raise ParameterError("memory estimation needs n >= 64")
    m = int(math.floor(n**0.65))
    dft = np.fft.rfft(x - x.mean())[1 : m + 1]
    I = (dft.real**2 + dft.imag**2) / (2 * math.pi * n)
    if not np.all(np.isfinite(I)) or np.all(I == 0):
        raise EstimationError("periodogram is degenerate")
    lam = 2 * math.pi * np.arange(1, m + 1) / n
    mll = float(np.mean(np.log(lam)))
    with np.errstate(divide="ignore"):
        obj = lambda dd: _whittle_objective(dd, lam, I, mll)  # noqa: E731
        res = optimize.minimize_scalar(obj, bounds=(0.0, upper), method="bounded",
                                       options={"xatol": 1e-7})
        cands = [(obj(0.0), 0.0), (obj(upper), upper)]
        if res.success and math.isfinite(res.fun):
            cands.append((res.fun, float(res.x)))
    cands = [c for c in cands if math.isfinite(c[0])]
    if not cands:
        raise EstimationError("local Whittle objective is not finite")
    _, d_hat = min(cands)
    d_hat = min(max(d_hat, 0.0), upper)
    return MemoryEstimate(d_hat, m, "local_whittle", clamped=d_hat >= upper - 1e-6)
