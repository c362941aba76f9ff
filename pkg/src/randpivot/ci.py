"""Randomized and classical confidence intervals for the mean."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import norm

from .errors import DenominatorError, ParameterError
from .linproc import Series, sample_autocov
from .studentize import hac_classical, hac_complete, hac_partial
from .weights import WeightScheme

__all__ = ["Interval", "z_quantile", "randomized_ci", "classical_ci", "CSV_FIELDS"]

CSV_FIELDS = ("method", "lo", "hi", "length", "covered")


def z_quantile(alpha: float) -> float:
    """Upper ``alpha/2`` point of the standard normal law."""
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    return float(norm.isf(alpha / 2))


@dataclass
class Interval:
    lo: float
    hi: float
    alpha: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def covers(self, mu: float) -> bool:
        return self.lo <= mu <= self.hi

    def to_csv_row(self, mu: Optional[float] = None) -> list:
        covered = "" if mu is None else int(self.covers(mu))
        return [self.method, repr(self.lo), repr(self.hi), repr(self.length), covered]


def _values(series) -> np.ndarray:
    return series.values if isinstance(series, Series) else np.asarray(series, dtype=float)


def randomized_ci(series, weights, theta: float, alpha: float, d: float, q: int,
                  complete: bool = False, scheme: Optional[WeightScheme] = None) -> Interval:
    """Interval from inverting the studentized randomized pivot.

    Endpoints are ``(sum (w_i-theta) X_i -/+ z n^(1/2+d) sqrt(st)) / sum (w_i-theta)``,
    sorted.  A vanishing ``sum (w_i - theta)`` raises ``DenominatorError``.
    """
    x = _values(series)
    w = np.asarray(weights, dtype=float)
    n = x.size
    if w.shape != x.shape:
        raise ParameterError("weights and series must have the same length")
    z = z_quantile(alpha)
    u = w - theta
    den = float(np.sum(u))
    if abs(den) <= 1e-12 * n * max(1.0, abs(theta)):
        raise DenominatorError("sum of centered weights is zero")
    g = sample_autocov(x, q)
    if complete:
        st = hac_complete(g, w, theta, q, d)
    else:
        if scheme is None:
            raise ParameterError("partial studentization needs the weight scheme")
        st = hac_partial(g, scheme, theta, q, d, n=n)
    num = float(np.dot(u, x))
    half = z * n ** (0.5 + d) * math.sqrt(st.value)
    a, b = (num - half) / den, (num + half) / den
    method = "randomized_complete" if complete else "randomized"
    diag = {"theta": float(theta), "q": q, "d_used": float(d), "weight_sum": den,
            "studentizer": st.value}
    return Interval(min(a, b), max(a, b), alpha, method, diag)


def classical_ci(series, alpha: float, d: float, q: int) -> Interval:
    """``mean +/- z n^(-1/2+d) sqrt(q^(-2d) Bartlett)``."""
    x = _values(series)
    n = x.size
    z = z_quantile(alpha)
    st = hac_classical(sample_autocov(x, q), q, d)
    half = z * n ** (-0.5 + d) * math.sqrt(st.value)
    m = float(x.mean())
    return Interval(m - half, m + half, alpha, "classical",
                    {"q": q, "d_used": float(d), "studentizer": st.value})
