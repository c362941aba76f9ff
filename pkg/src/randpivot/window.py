"""The window constant: roots of the cubic skewness functional.

``H(theta) = E(sum (w_i - theta) X_i)^3 / n`` is a cubic in ``theta``.  Grouping
the triple sum by how many indices coincide gives

    H(theta) = m3(theta) C3 + 3 m21(theta) C21 + 6 m111(theta) C111

where ``m3, m21, m111`` are centered weight moments (cubics in ``theta``) and

    C3   = E X_1^3
    C21  = sum_{h>=1} (1 - h/n) (E X_1^2 X_{1+h} + E X_1 X_{1+h}^2)
    C111 = sum_{h,h'>=1} (1 - (h+h')/n) E X_1 X_{1+h} X_{1+h+h'}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import (DegenerateVarianceError, IncompleteMomentsError,
                     NoAdmissibleWindowError, ParameterError)
from .linproc import MomentStructure, ProcessSpec, Series, plugin_moments, theoretical_moments
from .pivot import classical_variance, randomized_variance
from .weights import WeightScheme, raw_moments

__all__ = [
    "WindowSolution", "real_cubic_roots", "skewness_sums", "cubic_coefficients",
    "h_value", "solve_window_constant", "model_window", "plugin_window",
    "skewness_classical", "skewness_randomized",
]

Policy = Union[str, float]


def real_cubic_roots(c3: float, c2: float, c1: float, c0: float, polish: int = 2) -> list:
    """Real roots of ``c3 x^3 + c2 x^2 + c1 x + c0``, ascending.

    Closed form (Cardano for one real root, trigonometric for three) followed
    by ``polish`` Newton steps.  Leading coefficients that are negligible
    relative to the largest one drop the degree.  The zero polynomial raises
    ``ParameterError`` because every ``x`` is a root.
    """
    coeffs = [float(c3), float(c2), float(c1), float(c0)]
    big = max(abs(c) for c in coeffs)
    if big == 0:
        raise ParameterError("zero polynomial: every value is a root")
    while abs(coeffs[0]) <= 1e-14 * big:
        coeffs.pop(0)
    deg = len(coeffs) - 1
    if deg == 0:
        return []
    if deg == 1:
        return [-coeffs[1] / coeffs[0]]
    if deg == 2:
        a, b, c = coeffs
        disc = b * b - 4 * a * c
        if disc < 0:
            return []
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        roots = [q / a] if q == 0 else [q / a, c / q]
        return sorted(_polish(coeffs, r, polish) for r in _dedupe(roots))

    a, b, c = coeffs[1] / coeffs[0], coeffs[2] / coeffs[0], coeffs[3] / coeffs[0]
    shift = a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if p == 0 and q == 0:
        ts = [0.0]
    elif disc > 0:
        s = math.sqrt(disc)
        ts = [float(np.cbrt(-q / 2.0 + s) + np.cbrt(-q / 2.0 - s))]
    else:
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = (3.0 * q / (2.0 * p)) * math.sqrt(-3.0 / p)
        phi = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        ts = [r * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)]
    roots = [_polish(coeffs, t - shift, polish) for t in ts]
    return sorted(_dedupe(roots))


def _polish(coeffs, x: float, steps: int) -> float:
    for _ in range(steps):
        f = df = 0.0
        for c in coeffs:
            df = df * x + f
            f = f * x + c
        if df == 0 or not math.isfinite(f / df):
            break
        x -= f / df
    return x


def _dedupe(roots, rel: float = 1e-9) -> list:
    out = []
    for r in sorted(roots):
        if not out or abs(r - out[-1]) > rel * max(1.0, abs(r)):
            out.append(r)
    return out


def skewness_sums(mom: MomentStructure, n: int) -> tuple:
    """``(C3, C21, C111)`` using lags up to ``min(lag_cap, n-1)``."""
    if not mom.has_third_order:
        raise IncompleteMomentsError("moment structure lacks third-order entries")
    top = min(mom.lag_cap, n - 1)
    h = np.arange(1, top + 1)
    pair = mom.m3_pair[1 : top + 1]
    c21 = float(np.sum((1 - h / n) * (pair[:, 0] + pair[:, 1])))
    s = np.arange(2, top + 1)
    c111 = float(np.sum((1 - s / n) * mom.triple_span[2 : top + 1]))
    return float(mom.m3_single), c21, c111


def cubic_coefficients(mom: MomentStructure, scheme: WeightScheme, n: int) -> tuple:
    """Coefficients ``(c3, c2, c1, c0)`` of ``H(theta)``."""
    C3, C21, C111 = skewness_sums(mom, n)
    r = raw_moments(scheme, n)
    out = np.zeros(4)
    for poly, weight in ((r.poly_m3(), C3), (r.poly_m21(), 3 * C21), (r.poly_m111(), 6 * C111)):
        out += weight * np.asarray(poly)
    return tuple(float(c) for c in out)


def h_value(coeffs, theta):
    c3, c2, c1, c0 = coeffs
    return ((c3 * theta + c2) * theta + c1) * theta + c0


@dataclass
class WindowSolution:
    coeffs: tuple
    roots: list
    selected: float
    excluded: list = field(default_factory=list)
    residual: float = 0.0
    mode: str = "model"
    policy: str = "max_distance"
    degenerate: bool = False
    eps_excl: float = 0.0
    delta_max: float = 0.0
    weight_mean: float = 0.0

    def to_record(self) -> dict:
        """Flat, JSON-ready diagnostics."""
        return {
            "mode": self.mode,
            "policy": self.policy,
            "coeffs": list(self.coeffs),
            "roots": list(self.roots),
            "selected": self.selected,
            "excluded": [{"root": r, "reason": why} for r, why in self.excluded],
            "residual": self.residual,
            "degenerate": self.degenerate,
            "eps_excl": self.eps_excl,
            "delta_max": self.delta_max,
            "weight_mean": self.weight_mean,
        }


def solve_window_constant(coeffs, scheme: WeightScheme, n: int, policy: Policy = "max_distance",
                          eps_excl: Optional[float] = None, delta_max: Optional[float] = None,
                          mode: str = "model") -> WindowSolution:
    """Pick the window constant from the real roots of ``H``.

    Roots closer than ``eps_excl`` (default ``0.05 sd(w_1)``) to ``E w_1`` are
    excluded.  Policies: ``"max_distance"`` keeps the admissible root farthest
    from ``E w_1`` (shortest intervals), ``"nearest"`` the closest one, and a
    float fixes the constant outright.  Without an admissible root the
    admissible grid point minimizing ``|H|`` is used if ``|H| <= delta_max``
    (default ``1e-3 max(1, |c0|)``).
    """
    coeffs = tuple(float(c) for c in coeffs)
    if not all(math.isfinite(c) for c in coeffs):
        raise ParameterError("cubic coefficients must be finite")
    mean = scheme.mean
    sd = math.sqrt(scheme.variance(n))
    eps = 0.05 * sd if eps_excl is None else float(eps_excl)
    dmax = 1e-3 * max(1.0, abs(coeffs[3])) if delta_max is None else float(delta_max)
    common = dict(mode=mode, eps_excl=eps, delta_max=dmax, weight_mean=mean)

    if not isinstance(policy, str):
        theta = float(policy)
        return WindowSolution(coeffs, _roots_or_empty(coeffs), theta,
                              residual=h_value(coeffs, theta), policy="fixed", **common)
    if policy not in ("max_distance", "nearest"):
        raise ParameterError(f"unknown selection policy {policy!r}")

    if all(c == 0 for c in coeffs):
        return WindowSolution(coeffs, [], mean + 1.0, residual=0.0, policy=policy,
                              degenerate=True, **common)

    roots = real_cubic_roots(*coeffs)
    excluded, admissible = [], []
    for r in roots:
        if abs(r - mean) < eps:
            excluded.append((r, f"within eps_excl={eps:.3g} of E w1={mean:.6g}"))
        else:
            admissible.append(r)

    if admissible:
        dist = [abs(r - mean) for r in admissible]
        pick = max if policy == "max_distance" else min
        theta = admissible[dist.index(pick(dist))]
        return WindowSolution(coeffs, roots, theta, excluded, h_value(coeffs, theta),
                              policy=policy, **common)

    span = max(10.0 * sd, 2.0)
    grid = np.linspace(mean - span, mean + span, 40001)
    grid = grid[np.abs(grid - mean) >= eps]
    vals = np.abs(h_value(coeffs, grid))
    i = int(np.argmin(vals))
    if vals[i] > dmax:
        raise NoAdmissibleWindowError(
            f"no admissible window constant: min |H| = {vals[i]:.3g} > delta_max = {dmax:.3g}")
    theta = float(grid[i])
    return WindowSolution(coeffs, roots, theta, excluded, h_value(coeffs, theta),
                          policy=policy, **common)


def _roots_or_empty(coeffs) -> list:
    try:
        return real_cubic_roots(*coeffs)
    except ParameterError:
        return []


def model_window(spec: ProcessSpec, scheme: WeightScheme, n: int,
                 policy: Policy = "max_distance", **kwargs) -> WindowSolution:
    """Window constant from the model moments of ``spec`` (all lags up to ``n-1``)."""
    mom = theoretical_moments(spec, n - 1, Lpair=n - 1)
    return solve_window_constant(cubic_coefficients(mom, scheme, n), scheme, n, policy,
                                 mode="model", **kwargs)


def plugin_window(series, scheme: WeightScheme, L: int,
                  policy: Policy = "max_distance", **kwargs) -> WindowSolution:
    """Window constant from plug-in moments with lag cap ``L``."""
    mom = plugin_moments(series, L, L)
    n = len(series) if isinstance(series, Series) else np.asarray(series).size
    return solve_window_constant(cubic_coefficients(mom, scheme, n), scheme, n, policy,
                                 mode="plugin", **kwargs)


def skewness_classical(mom: MomentStructure, n: int) -> float:
    """Skewness ``E T^3`` of the classical pivot ``sum X_i / sd(sum X_i)``."""
    C3, C21, C111 = skewness_sums(mom, n)
    v = classical_variance(mom.gamma, n) / n
    if not v > 0:
        raise DegenerateVarianceError("long-run variance term is not positive")
    return (C3 + 3 * C21 + 6 * C111) / (math.sqrt(n) * v**1.5)


def skewness_randomized(mom: MomentStructure, scheme: WeightScheme, theta: float, n: int) -> float:
    """Skewness ``E T_w^3`` of the randomized pivot at ``theta``."""
    H = h_value(cubic_coefficients(mom, scheme, n), theta)
    return H * n / randomized_variance(scheme, theta, mom.gamma, n) ** 1.5
