"""Pair statistics of a phase configuration.

``S_N(f) = sum_{i != j} f(L (theta_i - theta_j)_c)`` is computed two ways:

* :func:`pair_sum_direct` evaluates the O(N^2) double sum pointwise;
* :func:`pair_sum_spectral` uses power-sum traces ``t_k = sum_j exp(i k theta_j)``
  and ``S = 2 sum_{m>=1} c_m |t_m|^2 + c_0 N^2 - N f(0)``.

The two routes share nothing beyond the configuration, which is why the
tests use each as an oracle for the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .functions import CircleSeries, _as_spec, eval_function
from .sampler import TWO_PI, PhaseConfiguration

__all__ = [
    "InsufficientTruncationError",
    "TraceVector",
    "PairStatValue",
    "circular_diff",
    "traces",
    "pair_sum_direct",
    "pair_sum_spectral",
    "pair_sum_from_phases",
    "spacings",
    "spacing_sum",
    "regime_for_scale",
]


class InsufficientTruncationError(ValueError):
    """The trace vector does not reach every nonzero coefficient of the series."""


@dataclass(frozen=True)
class TraceVector:
    """``t_k`` for ``k = 0..k_max``; negative ``k`` are the conjugates."""

    values: np.ndarray
    n: int

    def __post_init__(self):
        v = np.array(self.values, dtype=complex, copy=True).reshape(-1)
        if v.size == 0 or v[0] != self.n:
            raise ValueError("t_0 must equal the number of points")
        if np.max(np.abs(v)) > self.n * (1.0 + 1e-12):
            raise ValueError("|t_k| exceeds N")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def k_max(self) -> int:
        return self.values.size - 1

    def __getitem__(self, k: int) -> complex:
        v = self.values[abs(k)]
        return v if k >= 0 else v.conjugate()


@dataclass(frozen=True)
class PairStatValue:
    value: float
    regime: str
    l_n: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("pair statistic is not finite")
        if self.regime not in ("global", "meso", "micro"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.regime == "global" and self.l_n != 1.0:
            raise ValueError("the global regime uses l_n = 1")

    def __float__(self) -> float:
        return self.value


def regime_for_scale(l_n: float, n: int) -> str:
    if l_n == 1.0:
        return "global"
    if l_n == n:
        return "micro"
    return "meso"


# ---------------------------------------------------------------------------


def circular_diff(theta, phi):
    """Representative of ``theta - phi`` in ``[-pi, pi)`` for angles in ``[0, 2pi)``."""
    t = np.asarray(theta, dtype=float)
    p = np.asarray(phi, dtype=float)
    if np.any((t < 0) | (t >= TWO_PI)) or np.any((p < 0) | (p >= TWO_PI)):
        raise ValueError("angles must lie in [0, 2pi)")
    d = t - p
    d = np.where(d >= math.pi, d - TWO_PI, np.where(d < -math.pi, d + TWO_PI, d))
    return float(d) if d.ndim == 0 else d


@numba.njit(cache=True)
def _trace_kernel(theta, k_max):
    n = theta.shape[0]
    out = np.zeros(k_max + 1, np.complex128)
    out[0] = n
    for j in range(n):
        z = complex(math.cos(theta[j]), math.sin(theta[j]))
        w = z
        for k in range(1, k_max + 1):
            out[k] += w
            w = w * z
    return out


@numba.njit(cache=True)
def _trace_abs2_kernel(theta, k_max):
    # |t_k|^2 for k = 0..k_max; z^k by repeated multiplication
    n = theta.shape[0]
    re = np.zeros(k_max + 1)
    im = np.zeros(k_max + 1)
    for j in range(n):
        zr = math.cos(theta[j])
        zi = math.sin(theta[j])
        wr = zr
        wi = zi
        for k in range(1, k_max + 1):
            re[k] += wr
            im[k] += wi
            t = wr * zr - wi * zi
            wi = wr * zi + wi * zr
            wr = t
    out = re * re + im * im
    out[0] = float(n) * n
    return out


def _phases(cfg) -> np.ndarray:
    if isinstance(cfg, PhaseConfiguration):
        return cfg.phases
    return np.ascontiguousarray(cfg, dtype=float)


def traces(cfg, k_max: int) -> TraceVector:
    """Power sums ``t_k = sum_j exp(i k theta_j)`` for ``k = 0..k_max``."""
    if int(k_max) != k_max or k_max < 0:
        raise ValueError("k_max must be a nonnegative integer")
    th = _phases(cfg)
    return TraceVector(_trace_kernel(th, int(k_max)), th.size)


def _scale_or_regime(l_n, regime, n):
    l_n = float(l_n)
    if not l_n > 0:
        raise ValueError("l_n must be positive")
    return regime if regime is not None else regime_for_scale(l_n, n)


def pair_sum_direct(cfg, spec, l_n: float = 1.0, *, circular: bool = True, regime=None) -> PairStatValue:
    """O(N^2) evaluation of ``sum_{i != j} f(l_n (theta_i - theta_j)_c)``.

    With ``circular=False`` the plain difference replaces the circular one.
    """
    spec = _as_spec(spec)
    th = _phases(cfg)
    n = th.size
    regime = _scale_or_regime(l_n, regime, n)
    if n < 2:
        return PairStatValue(0.0, regime, float(l_n))
    i, j = np.nonzero(~np.eye(n, dtype=bool))
    d = circular_diff(th[i], th[j]) if circular else th[i] - th[j]
    vals = eval_function(spec, float(l_n) * np.asarray(d))
    return PairStatValue(math.fsum(np.atleast_1d(vals)), regime, float(l_n))


def _spectral_value(abs2: np.ndarray, series: CircleSeries, n: int) -> float:
    if series.f_at_zero is None:
        raise ValueError(
            "the spectral identity needs a finite f(0); use pair_sum_direct for this function"
        )
    K = series.k_max
    if not series.complete and series.tail is None:
        raise InsufficientTruncationError(
            "series is a truncation of a longer trigonometric polynomial; request a larger k_max"
        )
    if abs2.size - 1 < K:
        beyond = series.coeffs[abs2.size:]
        if np.any(beyond):
            raise InsufficientTruncationError(
                f"traces stop at k={abs2.size - 1} but the series has nonzero coefficients up to k={K}"
            )
        K = abs2.size - 1
    c = series.coeffs
    body = 2.0 * float(np.dot(c[1:K + 1], abs2[1:K + 1]))
    return math.fsum([body, c[0] * n * n, -n * series.f_at_zero])


def pair_sum_spectral(tr: TraceVector, series: CircleSeries, n: int | None = None, *, regime=None) -> PairStatValue:
    """Spectral evaluation ``2 sum_{m>=1} c_m |t_m|^2 + c_0 N^2 - N f(0)``."""
    n = tr.n if n is None else int(n)
    if n != tr.n:
        raise ValueError("n does not match the trace vector")
    abs2 = np.abs(tr.values) ** 2
    abs2[0] = float(n) * n
    l_n = float(getattr(series, "l_n", 1.0))
    regime = regime if regime is not None else regime_for_scale(l_n, n)
    return PairStatValue(_spectral_value(abs2, series, n), regime, l_n)


def pair_sum_from_phases(phases, series: CircleSeries) -> float:
    """Spectral pair statistic straight from phases (the Monte Carlo hot path)."""
    th = _phases(phases)
    K = series.k_max
    return _spectral_value(_trace_abs2_kernel(th, K), series, th.size)


# ---------------------------------------------------------------------------


def spacings(cfg) -> np.ndarray:
    """Rescaled nearest-neighbour spacings ``N (theta_(j+1) - theta_(j))``."""
    th = _phases(cfg)
    if th.size < 2:
        raise ValueError("spacings need at least two points")
    return th.size * np.diff(th)


def spacing_sum(cfg, spec) -> float:
    """``sum_j f(tau_j)`` over the rescaled spacings."""
    tau = spacings(cfg)
    return math.fsum(np.atleast_1d(eval_function(_as_spec(spec), tau)))
