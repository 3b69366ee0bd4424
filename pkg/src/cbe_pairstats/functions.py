"""Even real test functions on the circle and on the line.

Conventions
-----------
Circle:  ``fhat(k) = (1/2pi) * int_0^{2pi} f(x) exp(-i k x) dx`` so that
``f(x) = sum_k fhat(k) exp(i k x)``.

Line:    ``fhat(t) = (1/sqrt(2pi)) * int_R f(x) exp(-i t x) dx``.

A line function viewed at scale ``L`` and periodised onto the circle has
circle coefficients ``c_k = fhat(k/L) / (sqrt(2pi) * L)``; that is what
:func:`scaled_coeffs` produces.

Test functions are described by small JSON-friendly specs, e.g.::

    {"kind": "trigpoly", "coeffs": [[1, 1.0], [3, 0.5]]}
    {"kind": "logsine"}
    {"kind": "gaussian_bump", "width": 1.0, "support_radius": 5.0}
    {"kind": "table", "grid_step": 0.05, "values": [...]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional

import numpy as np

__all__ = [
    "SQRT_2PI",
    "SingularEvaluationError",
    "PeriodizationError",
    "DivergentSeriesError",
    "CircleSeries",
    "LineTransform",
    "ScaledSeries",
    "FunctionSpec",
    "circle_coeffs",
    "line_transform",
    "scaled_coeffs",
    "circle_restriction",
    "eval_function",
    "default_k_max",
]

SQRT_2PI = math.sqrt(2.0 * math.pi)
LOGSINE_DEFAULT_K = 10_000
CIRCLE_KINDS = ("trigpoly", "logsine")
LINE_KINDS = ("gaussian_bump", "table")


class SingularEvaluationError(ValueError):
    """A test function was evaluated at a point where it is not finite."""


class PeriodizationError(ValueError):
    """The scaled function would overlap itself after wrapping onto the circle."""


class DivergentSeriesError(ValueError):
    """A coefficient sum required by a formula does not converge."""


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True)
class CircleSeries:
    """Coefficients ``fhat(0..K)`` of an even real function on the circle.

    ``complete`` means every coefficient past ``k_max`` is exactly zero.
    When ``tail`` is given, coefficients past ``k_max`` are produced on
    demand by calling it with an integer array.  ``f_at_zero`` is ``None``
    when the function is singular at the origin.
    """

    coeffs: np.ndarray
    f_at_zero: Optional[float]
    complete: bool = False
    tail: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False, repr=False)
    label: str = ""

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float, copy=True).reshape(-1)
        if c.size == 0:
            raise ValueError("at least the zeroth coefficient is required")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.f_at_zero is not None:
            object.__setattr__(self, "f_at_zero", float(self.f_at_zero))
        if self.complete and self.f_at_zero is not None and not isinstance(self, ScaledSeries):
            recon = self.value_at_zero_from_series()
            if abs(recon - self.f_at_zero) > 1e-12 * max(1.0, abs(self.f_at_zero)):
                raise ValueError(
                    f"f(0)={self.f_at_zero!r} inconsistent with the coefficients (series gives {recon!r})"
                )

    @property
    def k_max(self) -> int:
        return self.coeffs.size - 1

    def coeff(self, k):
        """``fhat(k)`` for integer ``k`` (scalar or array); negatives fold by evenness."""
        k = np.abs(np.asarray(k, dtype=np.int64))
        out = np.zeros(k.shape, dtype=float)
        inside = k <= self.k_max
        out[inside] = self.coeffs[k[inside]]
        if self.tail is not None and np.any(~inside):
            out[~inside] = self.tail(k[~inside])
        return out if out.ndim else float(out)

    def extended(self, k_max: int) -> "CircleSeries":
        """Same function with coefficients stored up to ``k_max``."""
        if k_max <= self.k_max or self.tail is None:
            return self
        return self._replace_coeffs(self.coeff(np.arange(k_max + 1)))

    def truncated(self, k_max: int) -> "CircleSeries":
        if k_max >= self.k_max:
            return self
        drop = self.coeffs[k_max + 1:]
        return self._replace_coeffs(self.coeffs[: k_max + 1], complete=self.complete and not np.any(drop))

    def _replace_coeffs(self, coeffs, complete=None) -> "CircleSeries":
        return CircleSeries(
            coeffs,
            self.f_at_zero,
            complete=self.complete if complete is None else complete,
            tail=self.tail,
            label=self.label,
        )

    def value_at_zero_from_series(self) -> float:
        return math.fsum([self.coeffs[0], *(2.0 * self.coeffs[1:])])

    def evaluate(self, x) -> np.ndarray:
        """Truncated series ``sum_{|k|<=K} fhat(k) cos(kx)`` at ``x``."""
        x = np.asarray(x, dtype=float)
        k = np.arange(1, self.k_max + 1)
        return self.coeffs[0] + 2.0 * np.cos(np.multiply.outer(x, k)) @ self.coeffs[1:]

    def support(self) -> np.ndarray:
        """Positive frequencies with a nonzero coefficient."""
        return np.nonzero(self.coeffs[1:])[0] + 1

    def sobolev_sum(self, check_tail: bool = True) -> float:
        """``sum_{k>=1} k^2 fhat(k)^2``; raises when the on-demand tail shows divergence."""
        k = np.arange(1, self.k_max + 1, dtype=float)
        total = math.fsum((k * self.coeffs[1:]) ** 2)
        if check_tail and self.tail is not None and not self.complete:
            kk = np.arange(self.k_max + 1, 2 * self.k_max + 2)
            extra = math.fsum((kk * self.tail(kk)) ** 2)
            if extra > 1e-6 * max(total, 1e-300):
                raise DivergentSeriesError(
                    "sum k^2 fhat(k)^2 does not converge (tail between K and 2K is "
                    f"{extra:.3g} against a partial sum of {total:.3g}); this is outside the "
                    "CLT regime, use the log-sine variance instead"
                )
        return total


@dataclass(frozen=True)
class LineTransform:
    """Fourier transform of an even function on the real line.

    ``transform`` maps an array of ``t`` to ``fhat(t)``; ``grid_radius`` is
    a ``T`` beyond which ``|fhat|`` is negligible (or exactly zero).
    ``support_radius`` is ``None`` when ``f`` is not compactly supported.
    """

    transform: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    grid_radius: float
    f_at_zero: float
    support_radius: Optional[float] = None
    pointwise: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    exact_support: bool = False
    label: str = ""
    breakpoints: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.grid_radius > 0:
            raise ValueError("grid_radius must be positive")
        t = np.linspace(0.0, self.grid_radius, 101)
        a = np.asarray(self.transform(t), dtype=float)
        b = np.asarray(self.transform(-t), dtype=float)
        scale = max(1.0, float(np.max(np.abs(a))))
        if np.max(np.abs(a - b)) > 1e-12 * scale:
            raise ValueError("transform is not even")
        tt = np.linspace(-self.grid_radius, self.grid_radius, 4001)
        weight = np.trapezoid((1.0 + tt**2) * np.abs(self.transform(tt)), tt)
        if not math.isfinite(weight):
            raise ValueError("transform is not integrable against 1 + t^2 on its grid")

    def __call__(self, t):
        return self.transform(np.asarray(t, dtype=float))

    def evaluate(self, x) -> np.ndarray:
        if self.pointwise is None:
            raise NotImplementedError("no pointwise representation available")
        x = np.abs(np.asarray(x, dtype=float))
        out = np.asarray(self.pointwise(x), dtype=float)
        if self.support_radius is not None:
            out = np.where(x > self.support_radius, 0.0, out)
        return out


@dataclass(frozen=True)
class ScaledSeries(CircleSeries):
    """Circle coefficients ``c_k = fhat(k/L) / (sqrt(2pi) L)`` of ``f(L x)``."""

    l_n: float = 1.0
    base: Optional[LineTransform] = field(default=None, repr=False, compare=False)

    def _replace_coeffs(self, coeffs, complete=None) -> "ScaledSeries":
        return ScaledSeries(
            coeffs,
            self.f_at_zero,
            complete=self.complete if complete is None else complete,
            tail=self.tail,
            label=self.label,
            l_n=self.l_n,
            base=self.base,
        )


# ---------------------------------------------------------------------------
# specs


@dataclass(frozen=True)
class FunctionSpec:
    """Parsed JSON description of a test function."""

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CIRCLE_KINDS + LINE_KINDS:
            raise ValueError(f"unknown function kind {self.kind!r}")
        object.__setattr__(self, "params", dict(self.params))
        _VALIDATORS[self.kind](self.params)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "FunctionSpec":
        d = dict(d)
        try:
            kind = d.pop("kind")
        except KeyError:
            raise ValueError("function spec needs a 'kind' field") from None
        return cls(kind, d)

    @classmethod
    def from_json(cls, text: str) -> "FunctionSpec":
        return cls.from_dict(json.loads(text))

    @classmethod
    def trigpoly(cls, coeffs) -> "FunctionSpec":
        if isinstance(coeffs, Mapping):
            coeffs = sorted(coeffs.items())
        return cls("trigpoly", {"coeffs": [[int(k), float(a)] for k, a in coeffs]})

    @classmethod
    def gaussian_bump(cls, width: float = 1.0, support_radius: Optional[float] = None) -> "FunctionSpec":
        p = {"width": float(width)}
        if support_radius is not None:
            p["support_radius"] = float(support_radius)
        return cls("gaussian_bump", p)

    @classmethod
    def table(cls, grid_step: float, values, support_radius: Optional[float] = None) -> "FunctionSpec":
        p = {"grid_step": float(grid_step), "values": [float(v) for v in values]}
        if support_radius is not None:
            p["support_radius"] = float(support_radius)
        return cls("table", p)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def domain(self) -> str:
        return "circle" if self.kind in CIRCLE_KINDS else "line"


def _validate_trigpoly(p):
    coeffs = p.get("coeffs")
    if not isinstance(coeffs, (list, tuple)):
        raise ValueError("trigpoly needs a 'coeffs' list of [k, value] pairs")
    seen = set()
    for item in coeffs:
        if len(item) != 2:
            raise ValueError(f"bad trigpoly entry {item!r}")
        k, a = item
        if int(k) != k:
            raise ValueError(f"frequency {k!r} is not an integer")
        if abs(int(k)) in seen:
            raise ValueError(f"frequency {abs(int(k))} listed twice")
        seen.add(abs(int(k)))
        if not math.isfinite(float(a)):
            raise ValueError("coefficients must be finite")


def _validate_logsine(p):
    if p:
        raise ValueError("logsine takes no parameters")


def _validate_gaussian(p):
    w = float(p.get("width", 1.0))
    if not w > 0:
        raise ValueError("width must be positive")
    r = p.get("support_radius")
    if r is not None and not float(r) > 0:
        raise ValueError("support_radius must be positive")


def _validate_table(p):
    h = p.get("grid_step")
    vals = p.get("values")
    if h is None or not float(h) > 0:
        raise ValueError("table needs a positive 'grid_step'")
    if not vals:
        raise ValueError("table needs a nonempty 'values' list")
    if not all(math.isfinite(float(v)) for v in vals):
        raise ValueError("table values must be finite")
    r = p.get("support_radius")
    if r is not None and not float(r) > 0:
        raise ValueError("support_radius must be positive")


_VALIDATORS = {
    "trigpoly": _validate_trigpoly,
    "logsine": _validate_logsine,
    "gaussian_bump": _validate_gaussian,
    "table": _validate_table,
}


# ---------------------------------------------------------------------------
# circle kinds


def _trigpoly_array(spec: FunctionSpec) -> np.ndarray:
    pairs = [(abs(int(k)), float(a)) for k, a in spec.params["coeffs"]]
    K = max((k for k, _ in pairs), default=0)
    c = np.zeros(K + 1)
    for k, a in pairs:
        c[k] = a
    return c


def _logsine_tail(k):
    k = np.abs(np.asarray(k, dtype=float))
    with np.errstate(divide="ignore"):
        return np.where(k == 0, 0.0, -0.25 / np.where(k == 0, 1.0, k))


def default_k_max(spec: FunctionSpec) -> int:
    if spec.kind == "trigpoly":
        return _trigpoly_array(spec).size - 1
    if spec.kind == "logsine":
        return LOGSINE_DEFAULT_K
    raise ValueError(f"{spec.kind} is a line function; use scaled_coeffs")


def circle_coeffs(spec: FunctionSpec, k_max: Optional[int] = None) -> CircleSeries:
    """Circle coefficients ``fhat(0..k_max)`` for a trigpoly or logsine spec."""
    if spec.domain != "circle":
        raise ValueError(f"{spec.kind} is not a circle function; use scaled_coeffs")
    if k_max is None:
        k_max = default_k_max(spec)
    if int(k_max) != k_max or k_max < 0:
        raise ValueError("k_max must be a nonnegative integer")
    k_max = int(k_max)
    if spec.kind == "trigpoly":
        full = _trigpoly_array(spec)
        f0 = math.fsum([full[0], *(2.0 * full[1:])])
        c = np.zeros(k_max + 1)
        m = min(k_max + 1, full.size)
        c[:m] = full[:m]
        # f(0) keeps its true value even when the request truncates the support,
        # so consumers can detect an insufficient k_max
        return CircleSeries(c, f0, complete=not np.any(full[m:]), label="trigpoly")
    return CircleSeries(
        _logsine_tail(np.arange(k_max + 1)), None, complete=False, tail=_logsine_tail, label="logsine"
    )


# ---------------------------------------------------------------------------
# line kinds


def _gaussian_transform(width: float, support_radius: float) -> LineTransform:
    w = float(width)
    pref = w / math.sqrt(2.0)

    def fhat(t):
        t = np.asarray(t, dtype=float)
        return pref * np.exp(-0.25 * (w * t) ** 2)

    def f(x):
        return np.exp(-((np.asarray(x, dtype=float) / w) ** 2))

    return LineTransform(
        fhat,
        grid_radius=12.5 / w,
        f_at_zero=1.0,
        support_radius=support_radius,
        pointwise=f,
        exact_support=False,
        label=f"gaussian_bump(w={w:g})",
    )


def _table_transform(h: float, values, support_radius: Optional[float]) -> LineTransform:
    # fhat is the piecewise-linear interpolant sum_j v_|j| hat((t - jh)/h)
    v = np.asarray(values, dtype=float)
    M = v.size
    nodes = np.arange(M) * h

    def fhat(t):
        t = np.abs(np.asarray(t, dtype=float))
        return np.interp(t, np.append(nodes, M * h), np.append(v, 0.0), right=0.0)

    def f(x):
        x = np.asarray(x, dtype=float)
        u = 0.5 * h * x
        sinc2 = np.sinc(u / math.pi) ** 2
        cos_sum = v[0] + 2.0 * np.cos(np.multiply.outer(x, nodes[1:])) @ v[1:]
        return h * sinc2 * cos_sum / SQRT_2PI

    f0 = h * math.fsum([v[0], *(2.0 * v[1:])]) / SQRT_2PI
    return LineTransform(
        fhat,
        grid_radius=M * h,
        f_at_zero=f0,
        support_radius=support_radius,
        pointwise=f,
        exact_support=True,
        label=f"table(h={h:g}, m={M})",
        breakpoints=np.append(nodes, M * h),
    )


def line_transform(spec: FunctionSpec) -> LineTransform:
    """Transform representation of a gaussian_bump or table spec."""
    if spec.kind == "gaussian_bump":
        w = float(spec.params.get("width", 1.0))
        r = spec.params.get("support_radius")
        return _gaussian_transform(w, 5.0 * w if r is None else float(r))
    if spec.kind == "table":
        r = spec.params.get("support_radius")
        return _table_transform(float(spec.params["grid_step"]), spec.params["values"],
                                None if r is None else float(r))
    raise ValueError(f"{spec.kind} is a circle function; use circle_coeffs")


def scaled_coeffs(lt: LineTransform, l_n: float, k_max: Optional[int] = None) -> ScaledSeries:
    """Circle coefficients of ``x -> f(l_n x)`` periodised onto the circle."""
    l_n = float(l_n)
    if not l_n > 0:
        raise ValueError("l_n must be positive")
    if lt.support_radius is not None and lt.support_radius >= math.pi * l_n:
        raise PeriodizationError(
            f"support radius {lt.support_radius:g} is not below pi * l_n = {math.pi * l_n:g}"
        )
    if k_max is None:
        k_max = math.ceil(lt.grid_radius * l_n)
    if int(k_max) != k_max or k_max < 0:
        raise ValueError("k_max must be a nonnegative integer")
    k = np.arange(int(k_max) + 1)
    c = lt(k / l_n) / (SQRT_2PI * l_n)

    def tail(kk, lt=lt, l_n=l_n):
        return lt(np.asarray(kk, dtype=float) / l_n) / (SQRT_2PI * l_n)

    complete = lt.exact_support and k_max >= lt.grid_radius * l_n
    return ScaledSeries(c, lt.f_at_zero, complete=complete, tail=tail, label=lt.label, l_n=l_n, base=lt)


def circle_restriction(lt: LineTransform, k_max: Optional[int] = None) -> ScaledSeries:
    """A compactly supported line function with radius below pi read as a circle function."""
    return scaled_coeffs(lt, 1.0, k_max)


# ---------------------------------------------------------------------------
# pointwise evaluation


def _as_spec(spec) -> FunctionSpec:
    if isinstance(spec, FunctionSpec):
        return spec
    if isinstance(spec, Mapping):
        return FunctionSpec.from_dict(spec)
    if isinstance(spec, str):
        return FunctionSpec.from_json(spec)
    raise TypeError(f"cannot interpret {type(spec).__name__} as a function spec")


def eval_function(spec, x):
    """Pointwise value of the test function (vectorised over ``x``).

    Circle kinds are read modulo ``2pi``; line kinds vanish outside their
    support radius when one is declared.
    """
    spec = _as_spec(spec)
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise ValueError("x must be finite")
    ax = np.abs(xa)
    if spec.kind == "trigpoly":
        c = _trigpoly_array(spec)
        r = np.mod(ax, 2.0 * math.pi)
        out = c[0] + 2.0 * np.cos(np.multiply.outer(r, np.arange(1, c.size))) @ c[1:]
    elif spec.kind == "logsine":
        r = np.mod(ax, 2.0 * math.pi)
        if np.any(r == 0.0):
            raise SingularEvaluationError("log-sine function is singular at multiples of 2pi")
        out = 0.5 * np.log(2.0 * np.sin(0.5 * r))
    else:
        out = line_transform(spec).evaluate(ax)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out
