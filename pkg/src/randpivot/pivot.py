"""Classical and randomized pivots for the mean, with exact normalizers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateVarianceError, ParameterError
from .linproc import Series, lagged_dot, theoretical_moments
from .weights import WeightScheme, pattern_moments

__all__ = ["PivotValue", "randomized_variance", "pivot_classical", "pivot_randomized",
           "conditional_variance", "classical_variance"]


@dataclass(frozen=True)
class PivotValue:
    value: float
    numerator: float
    normalizer: float
    kind: str
    theta: Optional[float] = None


def _values(series) -> np.ndarray:
    return series.values if isinstance(series, Series) else np.asarray(series, dtype=float)


def _taper_sum(gamma: np.ndarray, n: int) -> float:
    top = min(n, gamma.size - 1)
    h = np.arange(1, top + 1)
    return float(np.sum((1 - h / n) * gamma[1 : top + 1]))


def classical_variance(gamma, n: int) -> float:
    """``Var(X_1 + ... + X_n)`` from autocovariances ``gamma[0..]``."""
    gamma = np.asarray(gamma, dtype=float)
    return n * (gamma[0] + 2 * _taper_sum(gamma, n))


def randomized_variance(scheme: WeightScheme, theta: float, gamma, n: int) -> float:
    """``Var(sum (w_i - theta) X_i)``, i.e. ``n`` times the per-observation variance.

    The per-observation part is ``E(w-theta)^2 gamma_0 + 2 E[(w_1-theta)(w_2-theta)]
    sum_{h=1}^{n} (1 - h/n) gamma_h``; lags missing from ``gamma`` count as 0.
    """
    gamma = np.asarray(gamma, dtype=float)
    pm = pattern_moments(scheme, theta, n)
    D = pm.m2 * gamma[0] + 2 * pm.m2cross * _taper_sum(gamma, n)
    if not D > 0:
        raise DegenerateVarianceError(f"randomized variance is not positive ({D:.3g})")
    return n * D


def pivot_classical(series, mu: float, var_sum: float) -> PivotValue:
    if not var_sum > 0:
        raise DegenerateVarianceError("Var(sum X_i) must be positive")
    x = _values(series)
    num = float(np.sum(x - mu))
    return PivotValue(num / math.sqrt(var_sum), num, float(var_sum), "classical")


def pivot_randomized(series, weights, theta: float, mu: float, scheme: WeightScheme,
                     gamma=None) -> PivotValue:
    """``sum (w_i - theta)(X_i - mu) / sqrt(Var(sum (w_i - theta) X_i))``.

    ``gamma`` defaults to the model autocovariances of ``series.spec``.
    """
    x = _values(series)
    w = np.asarray(weights, dtype=float)
    n = x.size
    if w.shape != x.shape:
        raise ParameterError("weights and series must have the same length")
    if gamma is None:
        spec = getattr(series, "spec", None)
        if spec is None:
            raise ParameterError("pass gamma or a series carrying its ProcessSpec")
        gamma = theoretical_moments(spec, n, Lpair=0).gamma
    normalizer = randomized_variance(scheme, theta, gamma, n)
    num = float(np.sum((w - theta) * (x - mu)))
    return PivotValue(num / math.sqrt(normalizer), num, normalizer, "randomized", float(theta))


def conditional_variance(weights, theta: float, gamma) -> float:
    """``Var(sum (w_i - theta) X_i | w)`` for fixed weights.

    ``gamma_0 sum u_i^2 + 2 sum_h gamma_h sum_j u_j u_{j+h}`` with
    ``u = w - theta``; ``gamma`` must reach lag ``n-1`` (shorter is zero-padded).
    """
    u = np.asarray(weights, dtype=float) - theta
    gamma = np.asarray(gamma, dtype=float)
    n = u.size
    top = min(n - 1, gamma.size - 1)
    r = lagged_dot(u, u, top)
    return float(gamma[0] * r[0] + 2 * np.dot(gamma[1 : top + 1], r[1:]))
