"""Closed-form finite-N moments of the pair statistic for the CUE.

All formulas consume circle coefficients ``fhat(k)`` (or scaled ones
``c_k``); only ``k >= 0`` is stored and evenness supplies the rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .functions import CircleSeries

__all__ = [
    "VarianceBreakdown",
    "CovarianceCase",
    "expected_pair_sum",
    "variance_pair_sum",
    "variance_via_covariance",
    "trace_covariance",
    "asymptotic_variance",
]


@dataclass(frozen=True)
class VarianceBreakdown:
    leading: float
    tail_quadratic: float
    tail_linear: float
    cross_band: float
    cross_overflow: float
    total: float

    def components(self) -> tuple:
        return (self.leading, self.tail_quadratic, self.tail_linear, self.cross_band, self.cross_overflow)


@dataclass(frozen=True)
class CovarianceCase:
    """``Cov(|t_s|^2, |t_t|^2)`` for CUE(N) with the region it came from."""

    label: str
    value: int

    def __int__(self) -> int:
        return self.value


def _check_n(n, minimum=1) -> int:
    if int(n) != n or n < minimum:
        raise ValueError(f"N must be an integer >= {minimum}")
    return int(n)


def expected_pair_sum(series: CircleSeries, n: int) -> float:
    """``fhat(0) N^2 - f(0) N + sum_{k in Z} fhat(k) min(|k|, N)``."""
    n = _check_n(n)
    if series.f_at_zero is None:
        raise ValueError(
            "f(0) is not finite for this function, so the exact mean is undefined; "
            "estimate it by Monte Carlo instead"
        )
    c = series.coeffs
    k = np.arange(1, c.size)
    body = 2.0 * math.fsum(c[1:] * np.minimum(k, n))
    return math.fsum([c[0] * n * n, -series.f_at_zero * n, body])


def trace_covariance(s: int, t: int, n: int) -> CovarianceCase:
    """Covariance of ``|t_s|^2`` and ``|t_t|^2``; negative indices fold to ``|s|``, ``|t|``."""
    n = _check_n(n)
    s, t = abs(int(s)), abs(int(t))
    if s == 0 or t == 0:
        return CovarianceCase("zero", 0)
    if s == t:
        if s >= n:
            return CovarianceCase("diag_saturated", n * (n - 1))
        if 2 * s <= n:
            return CovarianceCase("diag_small", s * s)
        return CovarianceCase("diag_large", n + s * s - 2 * s)
    d = abs(s - t)
    if d <= n - 1 and max(s, t) >= n:
        return CovarianceCase("band", d - n)
    if max(s, t) <= n - 1 and s + t >= n + 1:
        return CovarianceCase("overflow", n - (s + t))
    return CovarianceCase("zero", 0)


def variance_pair_sum(series: CircleSeries, n: int) -> VarianceBreakdown:
    """Five-term finite-N variance of ``S_N`` under CUE(N).

    ``leading``        ``4 sum_{1<=s<=N-1} s^2 fhat(s)^2``
    ``tail_quadratic`` ``4 N^2 sum_{s>=N} fhat(s)^2``
    ``tail_linear``    ``-4 N sum_{s>=N} fhat(s)^2``
    ``cross_band``     ``-4 sum (N - |s-t|) fhat(s) fhat(t)`` over ``s, t >= 1``,
                       ``1 <= |s-t| <= N-1``, ``max(s, t) >= N``
    ``cross_overflow`` ``-4 sum (s + t - N) fhat(s) fhat(t)`` over
                       ``1 <= s, t <= N-1``, ``s + t >= N+1``
    """
    n = _check_n(n, 2)
    f = np.asarray(series.coeffs, dtype=float)
    K = f.size - 1
    s = np.arange(1, min(n - 1, K) + 1, dtype=float)
    leading = 4.0 * math.fsum((s * f[1:s.size + 1]) ** 2)

    tail_sq = math.fsum(f[n:] ** 2) if K >= n else 0.0
    tail_quadratic = 4.0 * n * n * tail_sq
    tail_linear = -4.0 * n * tail_sq

    # band: with s > t the region is s >= N and d = s - t in 1..N-1; both orders count
    band_terms = []
    if K >= n:
        hi = f[n:]
        for d in range(1, n):
            lo = f[n - d:K + 1 - d]
            band_terms.append((n - d) * float(np.dot(hi, lo)))
    cross_band = -8.0 * math.fsum(band_terms)

    overflow_terms = []
    m = min(K, n - 1)
    if 2 * m >= n + 1:
        g = np.zeros(n)
        g[1:m + 1] = f[1:m + 1]
        conv = np.convolve(g, g)  # conv[u] = sum_{s+t=u} g_s g_t
        u = np.arange(n + 1, 2 * m + 1)
        overflow_terms = list((u - n) * conv[u])
    cross_overflow = -4.0 * math.fsum(overflow_terms)

    parts = (leading, tail_quadratic, tail_linear, cross_band, cross_overflow)
    return VarianceBreakdown(*parts, total=math.fsum(parts))


def variance_via_covariance(series: CircleSeries, n: int,
                            cov: Optional[Callable[[int, int, int], int]] = None) -> float:
    """``4 sum_{s,t>=1} fhat(s) fhat(t) Cov(|t_s|^2, |t_t|^2)`` with integer covariances.

    ``cov`` defaults to :func:`trace_covariance` and can be replaced to
    inject faults in consistency checks.
    """
    n = _check_n(n)
    cov = cov or (lambda a, b, m: trace_covariance(a, b, m).value)
    supp = [int(k) for k in series.support()]
    f = series.coeffs
    terms = [f[a] * f[b] * int(cov(a, b, n)) for a in supp for b in supp]
    return 4.0 * math.fsum(terms)


def asymptotic_variance(series: CircleSeries) -> float:
    """``4 sum_{k>=1} k^2 fhat(k)^2``; raises ``DivergentSeriesError`` when it diverges."""
    return 4.0 * series.sobolev_sum()
