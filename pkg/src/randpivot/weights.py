"""Randomizing weights and their moments.

Two families are supported: i.i.d. weights (Bernoulli or a user-supplied law
with known first three moments) and symmetric multinomial counts
``Multinomial(n; 1/n, ..., 1/n)``.  Every weight moment needed downstream is
derived from six raw joint moments of distinct coordinates, so the centered
("pattern") moments are exact polynomials in the window constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError
from .rng import as_generator

__all__ = ["WeightScheme", "RawMoments", "PatternMoments", "gen_weights", "gen_weights_batch",
           "pattern_moments", "raw_moments"]


@dataclass(frozen=True)
class WeightScheme:
    """Description of the randomizing weights.

    Build with :meth:`bernoulli`, :meth:`custom` or :meth:`multinomial`.
    ``fifth_moment_finite`` only gates the Edgeworth-error experiment.
    """

    kind: str
    p: float = 0.0
    moments: Optional[tuple] = None
    sampler: Optional[Callable] = field(default=None, compare=False, repr=False)
    n: Optional[int] = None
    fifth_moment_finite: bool = True

    def __post_init__(self):
        if self.kind == "bernoulli":
            if not 0 < self.p < 1:
                raise ParameterError(f"Bernoulli weights need 0 < p < 1, got {self.p}")
        elif self.kind == "custom":
            if self.moments is None or len(self.moments) != 3:
                raise ParameterError("custom weights need exact (E w, E w^2, E w^3)")
            m1, m2, _ = self.moments
            if m2 < m1 * m1 - 1e-12 * max(1.0, m2):
                raise ParameterError("custom weight moments imply negative variance")
        elif self.kind == "multinomial":
            if self.n is not None and self.n < 1:
                raise ParameterError("multinomial weights need n >= 1")
        else:
            raise ParameterError(f"unknown weight scheme {self.kind!r}")

    @classmethod
    def bernoulli(cls, p: float) -> "WeightScheme":
        return cls("bernoulli", p=float(p))

    @classmethod
    def custom(cls, moments, sampler=None, fifth_moment_finite: bool = True) -> "WeightScheme":
        return cls("custom", moments=tuple(float(m) for m in moments), sampler=sampler,
                   fifth_moment_finite=fifth_moment_finite)

    @classmethod
    def point_mass(cls, c: float) -> "WeightScheme":
        """Degenerate weights ``w_i = c``; useful for algebraic checks."""
        c = float(c)
        return cls.custom((c, c * c, c**3), sampler=lambda rng, size: np.full(size, c))

    @classmethod
    def multinomial(cls, n: Optional[int] = None) -> "WeightScheme":
        return cls("multinomial", n=n)

    @property
    def iid(self) -> bool:
        return self.kind != "multinomial"

    @property
    def mean(self) -> float:
        if self.kind == "bernoulli":
            return self.p
        if self.kind == "custom":
            return self.moments[0]
        return 1.0

    def variance(self, n: Optional[int] = None) -> float:
        if self.kind == "bernoulli":
            return self.p * (1 - self.p)
        if self.kind == "custom":
            return max(self.moments[1] - self.moments[0] ** 2, 0.0)
        return 1.0 - 1.0 / self._cells(n)

    def _cells(self, n: Optional[int]) -> int:
        cells = n if n is not None else self.n
        if cells is None:
            raise ParameterError("multinomial moments need the number of cells n")
        return int(cells)

    def to_config(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "bernoulli":
            out["p"] = repr(self.p)
        elif self.kind == "custom":
            out["moments"] = ",".join(repr(m) for m in self.moments)
        return out

    @classmethod
    def from_config(cls, cfg) -> "WeightScheme":
        kind = cfg.get("kind", "").strip().lower()
        try:
            if kind == "bernoulli":
                return cls.bernoulli(float(cfg["p"]))
            if kind == "multinomial":
                return cls.multinomial()
            if kind == "custom":
                raise ParameterError("custom weights need a sampler and cannot come from config")
        except KeyError as exc:
            raise ParameterError(f"weights config is missing {exc}") from None
        raise ParameterError(f"unknown weight scheme {kind!r}")


@dataclass(frozen=True)
class RawMoments:
    """Raw joint moments over distinct coordinates ``i, j, k``.

    ``m1 = E w_i``, ``m2 = E w_i^2``, ``m3 = E w_i^3``, ``m11 = E w_i w_j``,
    ``m21 = E w_i^2 w_j``, ``m111 = E w_i w_j w_k``.
    """

    m1: float
    m2: float
    m3: float
    m11: float
    m21: float
    m111: float

    # each pattern moment as cubic coefficients (c3, c2, c1, c0) in theta
    def poly_m3(self):
        return (-1.0, 3 * self.m1, -3 * self.m2, self.m3)

    def poly_m21(self):
        return (-1.0, 3 * self.m1, -(self.m2 + 2 * self.m11), self.m21)

    def poly_m111(self):
        return (-1.0, 3 * self.m1, -3 * self.m11, self.m111)


def raw_moments(scheme: WeightScheme, n: Optional[int] = None) -> RawMoments:
    """Exact raw moments of ``scheme``.

    For multinomial counts the joint moments follow from the factorial
    moments ``E[w_i^(a) w_j^(b) w_k^(c)] = n^(a+b+c) / n^(a+b+c)`` (falling
    factorial over power), e.g. ``E w_i w_j = (n-1)/n`` and
    ``E w_i w_j w_k = (n-1)(n-2)/n^2``.
    """
    if scheme.kind == "multinomial":
        c = scheme._cells(n)
        f2 = (c - 1) / c
        f3 = (c - 1) * (c - 2) / c**2
        return RawMoments(
            m1=1.0,
            m2=f2 + 1.0,
            m3=f3 + 3 * f2 + 1.0,
            m11=f2,
            m21=f3 + f2,
            m111=f3,
        )
    if scheme.kind == "bernoulli":
        m1 = m2 = m3 = scheme.p
    else:
        m1, m2, m3 = scheme.moments
    return RawMoments(m1=m1, m2=m2, m3=m3, m11=m1 * m1, m21=m2 * m1, m111=m1**3)


@dataclass(frozen=True)
class PatternMoments:
    """Moments of the centered weights ``w_i - theta``.

    ``K`` and ``Kprime`` are the large-``n`` limits of ``m2`` and ``m2cross``.
    """

    theta: float
    m1: float
    m2: float
    m2cross: float
    m3: float
    m21: float
    m111: float
    K: float
    Kprime: float
    at_mean: bool = False


def _polyval(c, x):
    return ((c[0] * x + c[1]) * x + c[2]) * x + c[3]


def pattern_moments(scheme: WeightScheme, theta: float, n: Optional[int] = None) -> PatternMoments:
    """Exact moments of ``w - theta`` for the given scheme.

    ``at_mean`` flags ``theta == E w_1``, the value excluded for window
    constants.
    """
    r = raw_moments(scheme, n)
    t = float(theta)
    m1 = r.m1 - t
    m2 = r.m2 - 2 * t * r.m1 + t * t
    m2cross = r.m11 - 2 * t * r.m1 + t * t
    if scheme.kind == "multinomial":
        K, Kp = 1.0 + (1 - t) ** 2, (1 - t) ** 2
    else:
        K, Kp = m2, m2cross
    return PatternMoments(
        theta=t, m1=m1, m2=m2, m2cross=m2cross,
        m3=_polyval(r.poly_m3(), t), m21=_polyval(r.poly_m21(), t),
        m111=_polyval(r.poly_m111(), t), K=K, Kprime=Kp,
        at_mean=math.isclose(t, r.m1, rel_tol=0, abs_tol=1e-12),
    )


def gen_weights(scheme: WeightScheme, n: int, seed) -> np.ndarray:
    """Draw ``w_1..w_n``.  Multinomial draws one vector of cell counts."""
    if n < 2:
        raise ParameterError("n must be at least 2")
    rng = as_generator(seed)
    if scheme.kind == "bernoulli":
        return (rng.random(n) < scheme.p).astype(float)
    if scheme.kind == "multinomial":
        if scheme.n is not None and scheme.n != n:
            raise ParameterError(f"scheme has {scheme.n} cells but n={n} weights were requested")
        return rng.multinomial(n, np.full(n, 1.0 / n)).astype(float)
    if scheme.sampler is None:
        raise ParameterError("custom weights need a sampler")
    w = np.asarray(scheme.sampler(rng, n), dtype=float)
    if w.shape != (n,):
        raise ParameterError(f"sampler returned shape {w.shape}, expected ({n},)")
    return w


def gen_weights_batch(scheme: WeightScheme, n: int, size: int, seed) -> np.ndarray:
    """Draw ``size`` independent weight vectors as a ``(size, n)`` array."""
    if n < 2:
        raise ParameterError("n must be at least 2")
    rng = as_generator(seed)
    if scheme.kind == "bernoulli":
        return (rng.random((size, n)) < scheme.p).astype(float)
    if scheme.kind == "multinomial":
        if scheme.n is not None and scheme.n != n:
            raise ParameterError(f"scheme has {scheme.n} cells but n={n} weights were requested")
        return rng.multinomial(n, np.full(n, 1.0 / n), size=size).astype(float)
    return np.stack([gen_weights(scheme, n, rng) for _ in range(size)])
