"""Limit laws for the centred pair statistic.

* global scale: ``(4/beta) sum_m fhat(m) m (phi_m - 1)`` with ``phi_m ~ Exp(1)``;
* mesoscopic scale: Gaussian with variance ``4/(pi beta^2) int fhat(t)^2 t^2 dt``;
* microscopic scale (beta = 2): Gaussian whose variance combines a diagonal
  integral with two correction integrals over the band ``|s - t| <= 1`` and
  the corner triangle ``s + t > 1`` of the unit square;
* the log-sine function: Gaussian after dividing by ``sqrt(N)``, with
  variance ``(2 - beta psi'(1 + beta/2)) / (4 beta)``.

The two-dimensional integrals are split into pieces that map onto
rectangles, and each rectangle gets a composite tensor Gauss-Legendre rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, special

from .functions import CircleSeries, DivergentSeriesError, LineTransform
from .sampler import _as_generator, _check_beta

__all__ = [
    "LimitLaw",
    "MicroVarianceTerms",
    "exp_series_law",
    "sample_limit_series",
    "sample_limit_series_batch",
    "exp_series_variance",
    "meso_variance",
    "micro_variance",
    "micro_variance_terms",
    "logsine_variance",
    "logsine_variance_finite",
    "logsine_mean_finite",
    "mean_large_n",
]

_GL_ORDER = 24
_PANEL = 0.25


@dataclass(frozen=True)
class LimitLaw:
    kind: str
    variance: float
    series: Optional[CircleSeries] = field(default=None, repr=False)
    beta: Optional[float] = None
    m_terms: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("exp_series", "gaussian"):
            raise ValueError(f"unknown limit kind {self.kind!r}")
        if not self.variance >= 0:
            raise ValueError("variance must be nonnegative")

    def sample(self, size: int, rng) -> np.ndarray:
        rng = _as_generator(rng)
        if self.kind == "gaussian":
            return rng.normal(0.0, math.sqrt(self.variance), size=size)
        return sample_limit_series_batch(self.series, self.beta, self.m_terms, size, rng)


# ---------------------------------------------------------------------------
# global regime


def _series_terms(series: CircleSeries, m_terms: Optional[int], beta: float,
                  budget: float = 1e-10) -> int:
    h = series.sobolev_sum()  # raises on divergence
    if m_terms is None:
        nz = series.support()
        m_terms = int(nz[-1]) if nz.size else 0
    m_terms = int(m_terms)
    if m_terms < 0:
        raise ValueError("m_terms must be nonnegative")
    k = np.arange(1, series.k_max + 1, dtype=float)
    kept = (k <= m_terms)
    dropped = math.fsum((k[~kept] * series.coeffs[1:][~kept]) ** 2)
    if series.tail is not None and not series.complete:
        kk = np.arange(series.k_max + 1, 2 * series.k_max + 2)
        dropped += math.fsum((kk * series.tail(kk)) ** 2)
    if dropped > budget * max(h, 1e-300):
        raise ValueError(
            f"truncating at M={m_terms} drops {16 * dropped / beta**2:.3g} of variance, "
            "above the budget; raise m_terms"
        )
    return m_terms


def exp_series_variance(series: CircleSeries, beta: float) -> float:
    """``16/beta^2 sum m^2 fhat(m)^2``, the variance of the global limit."""
    beta = _check_beta(beta)
    return 16.0 / beta**2 * series.sobolev_sum()


def exp_series_law(series: CircleSeries, beta: float, m_terms: Optional[int] = None) -> LimitLaw:
    beta = _check_beta(beta)
    m = _series_terms(series, m_terms, beta)
    return LimitLaw("exp_series", exp_series_variance(series, beta), series, beta, m)


def sample_limit_series_batch(series: CircleSeries, beta: float, m_terms: Optional[int],
                              size: int, seed) -> np.ndarray:
    """``size`` independent draws of ``(4/beta) sum_{m<=M} fhat(m) m (phi_m - 1)``."""
    beta = _check_beta(beta)
    M = _series_terms(series, m_terms, beta)
    rng = _as_generator(seed)
    if M == 0:
        return np.zeros(size)
    weights = np.arange(1, M + 1) * series.coeff(np.arange(1, M + 1))
    # Exp(1) by inversion; 1 - U lies in (0, 1] so the log is finite
    phi = -np.log1p(-rng.random((size, M)))
    return (4.0 / beta) * ((phi - 1.0) @ weights)


def sample_limit_series(series: CircleSeries, beta: float, m_terms: Optional[int], seed) -> float:
    """One draw of the global limit."""
    return float(sample_limit_series_batch(series, beta, m_terms, 1, seed)[0])


# ---------------------------------------------------------------------------
# quadrature helpers


def _gl_rule(a: float, b: float, breaks=None, panel: float = _PANEL, order: int = _GL_ORDER):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    if b <= a:
        return np.zeros(0), np.zeros(0)
    cuts = [a, b]
    if breaks is not None:
        cuts += [x for x in np.asarray(breaks, dtype=float) if a < x < b]
    cuts = np.unique(cuts)
    edges = [cuts[0]]
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        m = max(1, math.ceil((hi - lo) / panel))
        edges.extend(np.linspace(lo, hi, m + 1)[1:])
    edges = np.asarray(edges)
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * w
    return nodes.ravel(), weights.ravel()


def _breaks(lt: LineTransform):
    return getattr(lt, "breakpoints", None)


# ---------------------------------------------------------------------------
# mesoscopic regime


def meso_variance(lt: LineTransform, beta: float) -> float:
    """``4/(pi beta^2) int_R fhat(t)^2 t^2 dt``."""
    beta = _check_beta(beta)
    T = lt.grid_radius
    bp = _breaks(lt)
    if bp is not None:
        t, w = _gl_rule(0.0, T, bp)
        integral = math.fsum(w * (t * lt(t)) ** 2)
    else:
        integral, _ = integrate.quad(lambda t: (t * float(lt(t))) ** 2, 0.0, T,
                                     epsabs=0.0, epsrel=1e-12, limit=400)
    return 4.0 / (math.pi * beta**2) * 2.0 * integral


# ---------------------------------------------------------------------------
# microscopic regime


@dataclass(frozen=True)
class MicroVarianceTerms:
    """Pieces of the microscopic variance.

    ``diagonal``  ``(1/pi) int_R fhat(t)^2 min(|t|, 1)^2 dt``
    ``band``      ``(1/pi) iint_{|s-t|<=1, max(|s|,|t|)>=1} fhat(s) fhat(t) (1 - |s-t|)``
    ``triangle``  ``(1/pi) iint_{0<=s,t<=1, s+t>1} fhat(s) fhat(t) (s + t - 1)``

    The variance is ``diagonal - band - 2 * triangle``: the triangle appears
    once for each sign quadrant, just as the band does.
    """

    diagonal: float
    band: float
    triangle: float

    @property
    def variance(self) -> float:
        return self.diagonal - self.band - 2.0 * self.triangle

    @property
    def single_triangle_variance(self) -> float:
        """The combination with one triangle, kept for comparison."""
        return self.diagonal - self.band - self.triangle


def micro_variance_terms(lt: LineTransform) -> MicroVarianceTerms:
    T = lt.grid_radius
    bp = _breaks(lt)

    t, w = _gl_rule(0.0, min(1.0, T), bp)
    inner = math.fsum(w * (t * lt(t)) ** 2)
    t, w = _gl_rule(1.0, T, bp)
    outer = math.fsum(w * lt(t) ** 2) if t.size else 0.0
    diagonal = 2.0 / math.pi * (inner + outer)

    # band: the region splits into two mirror halves with s, t >= 0; in the
    # half with s >= t write t = s - d, so (s, d) ranges over [1, T] x [0, 1]
    band = 0.0
    if T > 1.0:
        s, ws = _gl_rule(1.0, T, bp)
        d, wd = _gl_rule(0.0, 1.0, None if bp is None else bp[bp <= 1.0])
        S, D = np.meshgrid(s, d, indexing="ij")
        vals = lt(S) * lt(S - D) * (1.0 - D)
        band = 4.0 / math.pi * math.fsum((ws[:, None] * wd[None, :] * vals).ravel())

    # triangle: t = 1 - s + s v with v in [0, 1], Jacobian s
    s, ws = _gl_rule(0.0, 1.0, None if bp is None else bp[bp <= 1.0])
    v, wv = _gl_rule(0.0, 1.0)
    S, V = np.meshgrid(s, v, indexing="ij")
    Tt = 1.0 - S + S * V
    vals = lt(S) * lt(Tt) * (S + Tt - 1.0) * S
    triangle = 1.0 / math.pi * math.fsum((ws[:, None] * wv[None, :] * vals).ravel())
    return MicroVarianceTerms(diagonal, band, triangle)


def micro_variance(lt: LineTransform) -> float:
    """Limiting ``Var(S_N(f(N .))) / N`` for the CUE."""
    return micro_variance_terms(lt).variance


# ---------------------------------------------------------------------------
# log-sine


def logsine_variance(beta: float) -> float:
    """``(2 - beta psi'(1 + beta/2)) / (4 beta)`` where ``psi'`` is the trigamma function."""
    beta = _check_beta(beta)
    return (2.0 - beta * float(special.polygamma(1, 1.0 + beta / 2.0))) / (4.0 * beta)


def logsine_variance_finite(beta: float, n: int) -> float:
    """Exact ``Var S_N(logsine)`` at finite ``N``.

    ``S_N(logsine) = log |Vandermonde|`` and its Laplace transform is a ratio
    of Selberg normalisations, giving
    ``(N^2/4) psi'(1 + beta N / 2) - (N/4) psi'(1 + beta/2)``.
    """
    beta = _check_beta(beta)
    n = int(n)
    return (n * n / 4.0) * float(special.polygamma(1, 1.0 + beta * n / 2.0)) \
        - (n / 4.0) * float(special.polygamma(1, 1.0 + beta / 2.0))


def logsine_mean_finite(beta: float, n: int) -> float:
    """Exact ``E S_N(logsine) = (N/2)(psi(1 + beta N/2) - psi(1 + beta/2))``."""
    beta = _check_beta(beta)
    n = int(n)
    return 0.5 * n * (float(special.digamma(1.0 + beta * n / 2.0)) - float(special.digamma(1.0 + beta / 2.0)))


def mean_large_n(series: CircleSeries, beta: float, n: int) -> float:
    """``fhat(0) N^2 - f(0) N + (2/beta) sum_{k in Z} fhat(k) |k|``, the large-N mean."""
    beta = _check_beta(beta)
    if series.f_at_zero is None:
        raise ValueError("f(0) is not finite for this function")
    k = np.arange(1, series.k_max + 1)
    return math.fsum([series.coeffs[0] * n * n, -series.f_at_zero * n,
                      (4.0 / beta) * math.fsum(series.coeffs[1:] * k)])


# keep the exception name importable from here for callers of the limit API
DivergentSeriesError = DivergentSeriesError
