"""Linear processes: simulation and second/third-order moment structure.

A linear process is ``X_t = mu + sum_k a_k zeta_{t-k}`` with i.i.d.
standardized innovations ``zeta``.  Four coefficient families are supported:
AR(1), fractionally integrated noise FI(d), finite moving averages and white
noise.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import signal, special

from .errors import DegenerateDataError, ParameterError
from .rng import as_generator

__all__ = [
    "Innovation",
    "ProcessSpec",
    "Series",
    "MomentStructure",
    "simulate",
    "simulate_batch",
    "ma_coefficients",
    "theoretical_moments",
    "sample_autocov",
    "plugin_moments",
    "ar1_burn_in",
    "fid_truncation",
    "lagged_dot",
]

_E = math.e
LOGNORMAL_SHIFT = math.exp(0.5)
LOGNORMAL_SCALE = math.sqrt(_E**2 - _E)
LOGNORMAL_SKEW = (_E + 2.0) * math.sqrt(_E - 1.0)
LOGNORMAL_KURT = _E**4 + 2 * _E**3 + 3 * _E**2 - 3.0

# above this many lags the (h, h') triple-moment table is not materialized
TRIPLE_TABLE_CAP = 256

# innovations held in memory at once by simulate_batch
_BLOCK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class Innovation:
    """Law of the standardized innovations (mean 0, variance 1).

    ``kind`` is ``"lognormal"`` (lognormal(0,1), shifted and scaled),
    ``"normal"`` or ``"custom"``.  A custom law supplies its moments
    ``(mu2, mu3, mu4)`` and optionally a ``sampler(rng, size)``.
    """

    kind: str = "lognormal"
    moments: Optional[tuple] = None
    sampler: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("lognormal", "normal", "custom"):
            raise ParameterError(f"unknown innovation law {self.kind!r}")
        if self.kind == "custom":
            if self.moments is None or len(self.moments) != 3:
                raise ParameterError("custom innovations need moments (mu2, mu3, mu4)")
            if self.moments[0] <= 0:
                raise ParameterError("innovation variance must be positive")

    @property
    def mu2(self) -> float:
        return 1.0 if self.kind != "custom" else float(self.moments[0])

    @property
    def mu3(self) -> float:
        if self.kind == "lognormal":
            return LOGNORMAL_SKEW
        if self.kind == "normal":
            return 0.0
        return float(self.moments[1])

    @property
    def mu4(self) -> float:
        if self.kind == "lognormal":
            return LOGNORMAL_KURT
        if self.kind == "normal":
            return 3.0
        return float(self.moments[2])

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "lognormal":
            z = rng.standard_normal(size)
            return (np.exp(z) - LOGNORMAL_SHIFT) / LOGNORMAL_SCALE
        if self.kind == "normal":
            return rng.standard_normal(size)
        if self.sampler is None:
            raise ParameterError("custom innovations need a sampler to be simulated")
        return np.asarray(self.sampler(rng, size), dtype=float)


@dataclass(frozen=True)
class ProcessSpec:
    """Generative description of a linear process.

    Use the constructors :meth:`ar1`, :meth:`fid`, :meth:`ma` and
    :meth:`white` rather than filling the fields by hand.
    """

    kind: str
    phi: float = 0.0
    d: float = 0.0
    coeffs: tuple = ()
    innovation: Innovation = Innovation()
    mu: float = 0.0

    def __post_init__(self):
        if self.kind not in ("ar1", "fid", "ma", "white"):
            raise ParameterError(f"unknown process kind {self.kind!r}")
        if not math.isfinite(self.mu):
            raise ParameterError("mu must be finite")
        if self.kind == "ar1" and not abs(self.phi) < 1:
            raise ParameterError(f"AR(1) needs |phi| < 1, got {self.phi}")
        if self.kind == "fid" and not 0 < self.d < 0.5:
            raise ParameterError(f"FI(d) needs 0 < d < 1/2, got {self.d}")
        if self.kind != "fid" and self.d != 0:
            raise ParameterError("short-memory processes have d = 0")
        if self.kind == "ma":
            if len(self.coeffs) == 0 or not all(math.isfinite(c) for c in self.coeffs):
                raise ParameterError("MA coefficients must be a non-empty finite sequence")

    @classmethod
    def ar1(cls, phi: float, innovation="lognormal", mu: float = 0.0) -> "ProcessSpec":
        return cls("ar1", phi=float(phi), innovation=_innovation(innovation), mu=mu)

    @classmethod
    def fid(cls, d: float, innovation="lognormal", mu: float = 0.0) -> "ProcessSpec":
        return cls("fid", d=float(d), innovation=_innovation(innovation), mu=mu)

    @classmethod
    def ma(cls, coeffs, innovation="lognormal", mu: float = 0.0) -> "ProcessSpec":
        return cls("ma", coeffs=tuple(float(c) for c in coeffs),
                   innovation=_innovation(innovation), mu=mu)

    @classmethod
    def white(cls, innovation="normal", mu: float = 0.0) -> "ProcessSpec":
        return cls("white", innovation=_innovation(innovation), mu=mu)

    @property
    def short_memory(self) -> bool:
        return self.kind != "fid"

    def to_config(self) -> dict:
        """Flat key/value view, the inverse of :meth:`from_config`."""
        out = {"kind": self.kind, "innovation": self.innovation.kind, "mu": repr(self.mu)}
        if self.kind == "ar1":
            out["phi"] = repr(self.phi)
        elif self.kind == "fid":
            out["d"] = repr(self.d)
        elif self.kind == "ma":
            out["coeffs"] = ",".join(repr(c) for c in self.coeffs)
        if self.innovation.kind == "custom":
            out["innovation_moments"] = ",".join(repr(m) for m in self.innovation.moments)
        return out

    @classmethod
    def from_config(cls, cfg) -> "ProcessSpec":
        try:
            kind = cfg["kind"].strip().lower()
            innov_kind = cfg.get("innovation", "lognormal").strip().lower()
            if innov_kind == "custom":
                moments = tuple(float(v) for v in cfg["innovation_moments"].split(","))
                innov = Innovation("custom", moments)
            else:
                innov = Innovation(innov_kind)
            mu = float(cfg.get("mu", 0.0))
            if kind == "ar1":
                return cls.ar1(float(cfg["phi"]), innov, mu)
            if kind == "fid":
                return cls.fid(float(cfg["d"]), innov, mu)
            if kind == "ma":
                return cls.ma([float(v) for v in cfg["coeffs"].split(",")], innov, mu)
            if kind == "white":
                return cls.white(innov, mu)
        except KeyError as exc:
            raise ParameterError(f"process config is missing {exc}") from None
        except ValueError as exc:
            if isinstance(exc, ParameterError):
                raise
            raise ParameterError(f"bad process config value: {exc}") from None
        raise ParameterError(f"unknown process kind {cfg.get('kind')!r}")


def _innovation(innov) -> Innovation:
    return innov if isinstance(innov, Innovation) else Innovation(str(innov))


@dataclass
class Series:
    """Observed values ``X_1..X_n`` with optional provenance."""

    values: np.ndarray
    spec: Optional[ProcessSpec] = None
    seed: object = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size < 2:
            raise ParameterError("a series needs at least 2 values")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("series values must be finite")

    def __len__(self) -> int:
        return self.values.size

    @property
    def n(self) -> int:
        return self.values.size

    def mean(self) -> float:
        return float(self.values.mean())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"])
            for v in self.values:
                w.writerow([repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "Series":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0]] != ["x"]:
            raise ParameterError(f"{path}: expected a single column with header 'x'")
        try:
            vals = [float(r[0]) for r in rows[1:] if r]
        except ValueError as exc:
            raise ParameterError(f"{path}: {exc}") from None
        return cls(np.array(vals))


def _values(series) -> np.ndarray:
    if isinstance(series, Series):
        return series.values
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 2:
        raise ParameterError("a series needs at least 2 values")
    return x


def ar1_burn_in(phi: float) -> int:
    # the guard keeps 10 / (1 - 0.8) from rounding up to 51
    return 1000 + math.ceil(10.0 / (1.0 - abs(phi)) - 1e-9)


def fid_truncation(n: int) -> int:
    return max(10 * n, 10_000)


def ma_coefficients(spec: ProcessSpec, K: int) -> np.ndarray:
    """Coefficients ``a_0..a_K`` of the MA(infinity) representation.

    FI(d) uses the recursion ``a_k = a_{k-1} (k-1+d)/k`` which equals
    ``Gamma(k+d) / (Gamma(d) Gamma(k+1))`` without overflow.
    """
    if K < 0:
        raise ParameterError("K must be non-negative")
    a = np.zeros(K + 1)
    if spec.kind == "white":
        a[0] = 1.0
    elif spec.kind == "ar1":
        a[:] = spec.phi ** np.arange(K + 1)
    elif spec.kind == "fid":
        a[0] = 1.0
        if K:
            k = np.arange(1, K + 1)
            a[1:] = np.cumprod((k - 1 + spec.d) / k)
    else:
        c = np.asarray(spec.coeffs[: K + 1])
        a[: c.size] = c
    return a


def simulate_batch(spec: ProcessSpec, n: int, size: int, seed) -> np.ndarray:
    """Simulate ``size`` independent paths of length ``n`` as a 2-D array.

    Paths are generated in row blocks of bounded memory; consecutive blocks
    read the generator in order, so the result does not depend on the block size.
    """
    if n < 2:
        raise ParameterError("n must be at least 2")
    rng = as_generator(seed)
    if spec.kind == "white":
        width, burn, a = n, 0, None
    elif spec.kind == "ar1":
        burn = ar1_burn_in(spec.phi)
        width, a = n + burn, None
    else:
        K = fid_truncation(n) if spec.kind == "fid" else len(spec.coeffs) - 1
        a = ma_coefficients(spec, K)
        width, burn = n + K, 0
    rows = max(1, _BLOCK_ELEMENTS // width)
    out = np.empty((size, n))
    for start in range(0, size, rows):
        stop = min(size, start + rows)
        e = spec.innovation.draw(rng, (stop - start, width))
        if spec.kind == "white":
            out[start:stop] = e
        elif spec.kind == "ar1":
            out[start:stop] = signal.lfilter([1.0], [1.0, -spec.phi], e, axis=1)[:, burn:]
        elif a.size < 64:
            out[start:stop] = np.stack([np.convolve(row, a, mode="valid") for row in e])
        else:
            out[start:stop] = signal.fftconvolve(e, a[None, :], mode="valid", axes=1)
    return out + spec.mu


def simulate(spec: ProcessSpec, n: int, seed) -> Series:
    """Simulate ``X_1..X_n`` from ``spec``.

    AR(1) discards ``ar1_burn_in(phi)`` leading values.  FI(d) uses the
    MA(infinity) form truncated at ``K = max(10 n, 10^4)`` coefficients; the
    relative truncation error in ``gamma_0`` is recorded in ``notes``.
    """
    x = simulate_batch(spec, n, 1, seed)[0]
    notes = {}
    if spec.kind == "ar1":
        notes["burn_in"] = ar1_burn_in(spec.phi)
    elif spec.kind == "fid":
        K = fid_truncation(n)
        notes["ma_truncation"] = K
        notes["gamma0_truncation_rel"] = _fid_gamma0_tail(spec.d, K) / _fid_gamma(spec.d, 0)[0]
    seed_rec = seed if isinstance(seed, (int, np.integer)) else None
    return Series(x, spec=spec, seed=seed_rec, notes=notes)


def lagged_dot(u: np.ndarray, v: np.ndarray, maxlag: int) -> np.ndarray:
    """``r[s] = sum_k u[k] v[k+s]`` for ``s = 0..maxlag`` (zero beyond the ends)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    m = u.size + v.size
    if maxlag < 32 or m < 256:
        out = np.zeros(maxlag + 1)
        for s in range(min(maxlag, v.size - 1) + 1):
            k = min(u.size, v.size - s)
            out[s] = np.dot(u[:k], v[s : s + k])
        return out
    nfft = 1 << (m - 1).bit_length()
    r = np.fft.irfft(np.conj(np.fft.rfft(u, nfft)) * np.fft.rfft(v, nfft), nfft)
    out = np.zeros(maxlag + 1)
    top = min(maxlag, v.size - 1)
    out[: top + 1] = r[: top + 1]
    return out


@dataclass
class MomentStructure:
    """Second- and third-order moments of a (mean-zero) linear process.

    Attributes
    ----------
    gamma : ndarray
        ``gamma[h]`` for ``h = 0..H``.
    m3_single : float
        ``E X_1^3``.
    m3_pair : ndarray, shape (L+1, 2)
        Row ``h`` holds ``(E X_1^2 X_{1+h}, E X_1 X_{1+h}^2)``; row 0 repeats
        ``m3_single``.
    triple_span : ndarray, shape (L+1,)
        ``triple_span[s] = sum_{h+h'=s; h,h'>=1} E X_1 X_{1+h} X_{1+h+h'}``.
        This is all the skewness functional needs.
    m3_triple : ndarray or None
        Full table ``[h, h']`` with ``h + h' <= L``; ``None`` when ``L`` exceeds
        ``TRIPLE_TABLE_CAP``.
    source : str
        ``"model"`` or ``"plugin"``.
    lag_cap : int
        ``L``, the largest lag span carried by the third-order entries.
    """

    gamma: np.ndarray
    m3_single: Optional[float]
    m3_pair: Optional[np.ndarray]
    triple_span: Optional[np.ndarray]
    m3_triple: Optional[np.ndarray] = None
    source: str = "model"
    lag_cap: int = 0
    truncation_tol: float = 0.0
    truncation_warning: bool = False

    @property
    def has_third_order(self) -> bool:
        return (self.m3_single is not None and self.m3_pair is not None
                and self.triple_span is not None)


def _fid_gamma(d: float, H: int) -> np.ndarray:
    g = np.empty(H + 1)
    g[0] = math.exp(special.gammaln(1 - 2 * d) - 2 * special.gammaln(1 - d))
    if H:
        j = np.arange(1, H + 1)
        g[1:] = g[0] * np.cumprod((j - 1 + d) / (j - d))
    return g


def _fid_gamma0_tail(d: float, K: int) -> float:
    # sum_{k>K} a_k^2 with a_k ~ k^(d-1)/Gamma(d)
    c = 1.0 / math.gamma(d)
    return c * c * K ** (2 * d - 1) / (1 - 2 * d)


def _default_K(spec: ProcessSpec, L: int) -> int:
    if spec.kind == "white":
        return 0
    if spec.kind == "ma":
        return len(spec.coeffs) - 1
    if spec.kind == "ar1":
        if spec.phi == 0:
            return 0
        return int(math.ceil(math.log(1e-17) / math.log(abs(spec.phi)))) + 1
    return max(10 * L, 10_000)


def theoretical_moments(spec: ProcessSpec, H: int, Lpair: Optional[int] = None,
                        K: Optional[int] = None, tol: float = 1e-3) -> MomentStructure:
    """Model moments of ``spec`` from its MA coefficients.

    ``gamma`` runs to lag ``H``; third-order entries to lag span ``Lpair``
    (default ``H``).  Sums over the coefficients are truncated at ``K``.  For
    FI(d) the autocovariances use the exact closed form; the truncated sums
    are only used for the third-order entries, whose tails decay like
    ``K^(3d-2)``.  ``truncation_warning`` is set when the estimated tail
    exceeds ``tol`` relative to the leading moment.
    """
    if H < 0:
        raise ParameterError("H must be non-negative")
    L = H if Lpair is None else int(Lpair)
    if L < 0:
        raise ParameterError("Lpair must be non-negative")
    if K is None:
        K = _default_K(spec, max(H, L))
    a = ma_coefficients(spec, K)
    innov = spec.innovation
    mu3 = innov.mu3

    tail_g = tail_3 = 0.0
    if spec.kind == "fid":
        gamma = _fid_gamma(spec.d, H) * innov.mu2
        c = 1.0 / math.gamma(spec.d)
        tail_g = _fid_gamma0_tail(spec.d, K)
        tail_3 = c**3 * K ** (3 * spec.d - 2) / (2 - 3 * spec.d)
    else:
        gamma = lagged_dot(a, a, H) * innov.mu2
        if spec.kind == "ar1" and spec.phi != 0:
            tail_g = abs(spec.phi) ** (2 * (K + 1)) / (1 - spec.phi**2)
            tail_3 = abs(spec.phi) ** (3 * (K + 1)) / (1 - abs(spec.phi) ** 3)

    m3_single = mu3 * float(np.sum(a**3))
    pair = np.empty((L + 1, 2))
    pair[:, 0] = mu3 * lagged_dot(a * a, a, L)
    pair[:, 1] = mu3 * lagged_dot(a, a * a, L)

    # sum_{h=1}^{s-1} a_k a_{k+h} a_{k+s} = a_k a_{k+s} (P[k+s-1] - P[k])
    P = np.cumsum(a)
    c_shift = np.zeros_like(a)
    c_shift[1:] = a[1:] * P[:-1]
    span = mu3 * (lagged_dot(a, c_shift, L) - lagged_dot(a * P, a, L))
    span[: min(2, L + 1)] = 0.0

    table = None
    if L <= TRIPLE_TABLE_CAP:
        table = np.zeros((L + 1, L + 1))
        for h in range(1, min(L, a.size)):
            b = a[: a.size - h] * a[h:]
            r = lagged_dot(b, a, L)
            hp = np.arange(1, L - h + 1)
            table[h, hp] = mu3 * r[h + hp]

    scale = max(abs(m3_single), 1e-300) if mu3 != 0 else 1.0
    warn = mu3 != 0 and tail_3 * abs(mu3) > tol * scale
    if warn:
        warnings.warn(f"MA truncation K={K} leaves third-moment tail {tail_3:.2e}",
                      RuntimeWarning, stacklevel=2)
    return MomentStructure(
        gamma=gamma, m3_single=m3_single, m3_pair=pair, triple_span=span,
        m3_triple=table, source="model", lag_cap=L,
        truncation_tol=max(tail_g * innov.mu2, tail_3 * abs(mu3)),
        truncation_warning=bool(warn),
    )


def sample_autocov(series, smax: int) -> np.ndarray:
    """Sample autocovariances with divisor ``n``, lags ``0..smax``."""
    x = _values(series)
    n = x.size
    if smax < 0 or smax >= n:
        raise ParameterError(f"smax must lie in [0, n-1], got {smax} with n={n}")
    if np.ptp(x) == 0:
        return np.zeros(smax + 1)
    xc = x - x.mean()
    return lagged_dot(xc, xc, smax) / n


def plugin_moments(series, H: int, L: int) -> MomentStructure:
    """Empirical counterpart of :func:`theoretical_moments`.

    Products are centered at the sample mean and divided by ``n``.
    Third-order entries run to lag span ``L``.
    """
    x = _values(series)
    n = x.size
    if not 0 <= L <= H <= n - 2:
        raise ParameterError(f"need 0 <= L <= H <= n-2, got L={L}, H={H}, n={n}")
    if np.ptp(x) == 0:
        raise DegenerateDataError("constant series has no moment structure")
    xc = x - x.mean()
    gamma = lagged_dot(xc, xc, H) / n
    x2 = xc * xc
    pair = np.empty((L + 1, 2))
    pair[:, 0] = lagged_dot(x2, xc, L) / n
    pair[:, 1] = lagged_dot(xc, x2, L) / n
    table = np.zeros((L + 1, L + 1))
    for h in range(1, L):
        b = xc[: n - h] * xc[h:]
        for hp in range(1, L - h + 1):
            table[h, hp] = np.dot(b[: n - h - hp], xc[h + hp :]) / n
    span = np.zeros(L + 1)
    for s in range(2, L + 1):
        span[s] = sum(table[h, s - h] for h in range(1, s))
    return MomentStructure(
        gamma=gamma, m3_single=float(np.mean(xc**3)), m3_pair=pair,
        triple_span=span, m3_triple=table, source="plugin", lag_cap=L,
    )
