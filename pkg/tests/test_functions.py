import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from cbe_pairstats.functions import (
    SQRT_2PI,
    CircleSeries,
    DivergentSeriesError,
    FunctionSpec,
    LineTransform,
    PeriodizationError,
    SingularEvaluationError,
    circle_coeffs,
    circle_restriction,
    eval_function,
    line_transform,
    scaled_coeffs,
)

TWO_COS = FunctionSpec.trigpoly([[1, 1.0]])
LOGSINE = FunctionSpec("logsine", {})
BUMP = FunctionSpec.gaussian_bump(1.0)
TABLE = FunctionSpec.table(0.25, [1.0, 0.8, 0.5, 0.3, 0.1])


# ---------------------------------------------------------------- specs


def test_spec_json_roundtrip():
    for spec in (TWO_COS, LOGSINE, BUMP, TABLE):
        assert FunctionSpec.from_json(spec.to_json()) == spec


def test_spec_examples_parse():
    for text in ('{"kind":"trigpoly","coeffs":[[1,1.0],[2,-0.5]]}', '{"kind":"logsine"}',
                 '{"kind":"gaussian_bump","width":1.0,"support_radius":5.0}',
                 '{"kind":"table","grid_step":0.5,"values":[1,0.5]}'):
        spec = FunctionSpec.from_json(text)
        assert spec.domain in ("circle", "line")


@pytest.mark.parametrize("bad", [
    {"kind": "nope"},
    {"kind": "trigpoly", "coeffs": [[1, 1.0], [-1, 2.0]]},
    {"kind": "trigpoly", "coeffs": [[1.5, 1.0]]},
    {"kind": "trigpoly"},
    {"kind": "logsine", "width": 2},
    {"kind": "gaussian_bump", "width": -1},
    {"kind": "table", "grid_step": 0, "values": [1.0]},
    {"kind": "table", "grid_step": 0.1, "values": []},
])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        FunctionSpec.from_dict(bad)


# ---------------------------------------------------------------- circle


def test_two_cos_coefficients():
    s = circle_coeffs(TWO_COS)
    assert s.coeff(1) == 1.0 and s.coeff(-1) == 1.0
    assert s.coeff(0) == 0.0 and s.coeff(7) == 0.0
    assert s.f_at_zero == 2.0


def test_negative_k_max_rejected():
    with pytest.raises(ValueError):
        circle_coeffs(TWO_COS, -1)


def test_logsine_coefficients_closed_form():
    s = circle_coeffs(LOGSINE, 4)
    assert np.allclose(s.coeffs[1:], [-1 / 4, -1 / 8, -1 / 12, -1 / 16], rtol=0, atol=1e-15)
    assert s.coeffs[0] == 0.0
    assert s.f_at_zero is None


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_logsine_coefficients_by_quadrature(k):
    # (1/2pi) int_0^2pi (1/2) ln|2 sin(x/2)| cos(kx) dx = (1/pi) int_0^pi ...; the
    # logarithmic endpoint singularity is integrated with the algebraic-log weight
    smooth = lambda x: 0.5 * (np.log(2 * np.sin(x / 2)) - np.log(x)) * np.cos(k * x)
    a, _ = integrate.quad(smooth, 0, math.pi, epsabs=1e-14, epsrel=1e-13, limit=200)
    b, _ = integrate.quad(lambda x: 0.5 * np.cos(k * x), 0, math.pi, weight="alg-loga",
                          wvar=(0.0, 0.0), epsabs=1e-14, epsrel=1e-13, limit=200)
    assert abs((a + b) / math.pi - circle_coeffs(LOGSINE, 4).coeffs[k]) < 1e-10


def test_logsine_sobolev_sum_diverges():
    with pytest.raises(DivergentSeriesError):
        circle_coeffs(LOGSINE, 2000).sobolev_sum()


def test_series_f0_checked_against_coefficients():
    with pytest.raises(ValueError):
        CircleSeries(np.array([0.0, 1.0]), 5.0, complete=True)


def test_trigpoly_truncation_keeps_true_f0():
    spec = FunctionSpec.trigpoly([[1, 1.0], [5, 0.5]])
    s = circle_coeffs(spec, 3)
    assert not s.complete
    assert s.f_at_zero == 3.0


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.floats(-20, 20))
def test_trigpoly_series_matches_pointwise(coeffs, x):
    spec = FunctionSpec.trigpoly([[k, c] for k, c in enumerate(coeffs)])
    s = circle_coeffs(spec)
    assert abs(s.evaluate(x) - eval_function(spec, x)) <= 1e-12 * (1 + np.abs(s.coeffs).sum())


@pytest.mark.parametrize("spec", [TWO_COS, LOGSINE, BUMP, TABLE])
def test_evenness(spec):
    x = np.random.default_rng(4).uniform(0.01, 6.0, 100)
    a = eval_function(spec, x)
    b = eval_function(spec, -x)
    if spec.kind == "trigpoly":
        assert np.array_equal(a, b)
    else:
        assert np.max(np.abs(a - b)) <= 1e-12


def test_pointwise_examples():
    assert eval_function(TWO_COS, 0.0) == 2.0
    assert eval_function(BUMP, 5.01) == 0.0
    assert abs(eval_function(LOGSINE, math.pi) - 0.5 * math.log(2)) < 1e-15
    with pytest.raises(SingularEvaluationError):
        eval_function(LOGSINE, 4 * math.pi)
    with pytest.raises(ValueError):
        eval_function(TWO_COS, float("nan"))


def test_logsine_at_pi_from_series():
    k = np.arange(1, 100_001)
    series = 2.0 * math.fsum((-0.25 / k) * np.cos(k * math.pi))
    assert abs(series - eval_function(LOGSINE, math.pi)) < 1e-5


# ---------------------------------------------------------------- line


def test_gaussian_transform_matches_numerical_transform():
    lt = line_transform(BUMP)
    for t in (0.0, 0.7, 2.3):
        val, _ = integrate.quad(lambda x: math.exp(-x * x) * math.cos(t * x), -12, 12, epsabs=1e-14)
        assert abs(val / SQRT_2PI - float(lt(t))) < 1e-10


def test_table_transform_inverts_to_pointwise():
    lt = line_transform(TABLE)
    for x in (0.0, 0.4, 3.0, 11.0):
        val, _ = integrate.quad(lambda t: float(lt(t)) * math.cos(t * x), -1.25, 1.25,
                                points=[-1, -0.75, -0.5, -0.25, 0, 0.25, 0.5, 0.75, 1], epsabs=1e-13)
        assert abs(val / SQRT_2PI - float(lt.evaluate(x))) < 1e-10


def test_line_transform_validates_evenness():
    with pytest.raises(ValueError):
        LineTransform(lambda t: np.exp(-(np.asarray(t) - 1.0) ** 2), grid_radius=5.0, f_at_zero=1.0)


def test_scaled_coefficients():
    lt = line_transform(BUMP)
    s = scaled_coeffs(lt, 16.0)
    assert s.coeff(0) == float(lt(0.0)) / (SQRT_2PI * 16.0)
    assert s.k_max == math.ceil(lt.grid_radius * 16)


def test_zero_transform_gives_zero_coefficients():
    lt = LineTransform(lambda t: np.zeros_like(np.asarray(t, dtype=float)), grid_radius=1.0, f_at_zero=0.0)
    assert not np.any(scaled_coeffs(lt, 8.0).coeffs)


def test_periodization_overlap_rejected():
    with pytest.raises(PeriodizationError):
        scaled_coeffs(line_transform(BUMP), 1.0)
    with pytest.raises(ValueError):
        scaled_coeffs(line_transform(BUMP), 0.0)


def test_parseval_riemann_sum():
    lt = line_transform(BUMP)
    s = scaled_coeffs(lt, 64.0)
    k = np.arange(-s.k_max, s.k_max + 1)
    lhs = math.fsum(s.coeff(k) ** 2)
    exact_sum = math.fsum(lt(k / 64.0) ** 2) / (SQRT_2PI * 64.0) ** 2
    assert lhs == pytest.approx(exact_sum, rel=1e-14)
    integral, _ = integrate.quad(lambda t: float(lt(t)) ** 2, -np.inf, np.inf)
    assert abs(lhs / (integral / (2 * math.pi * 64.0)) - 1) < 0.01


def test_scaled_coefficient_limit():
    lt = line_transform(BUMP)
    L = 256.0
    s = scaled_coeffs(lt, L)
    for t in (0.0, 0.5, 1.5, 3.0):
        approx = L * s.coeff(math.floor(t * L)) * SQRT_2PI
        assert abs(approx / float(lt(t)) - 1) <= 0.01


def test_circle_restriction_needs_radius_below_pi():
    s = circle_restriction(line_transform(FunctionSpec.gaussian_bump(0.5)))
    assert s.l_n == 1.0
    with pytest.raises(PeriodizationError):
        circle_restriction(line_transform(FunctionSpec.gaussian_bump(1.0)))


def test_table_f0_from_values():
    lt = line_transform(FunctionSpec.table(0.5, [2.0, 1.0]))
    assert lt.f_at_zero == pytest.approx(0.5 * (2.0 + 2.0) / SQRT_2PI, rel=1e-15)
    assert lt.exact_support and lt.grid_radius == 1.0


def test_spec_dict_is_json_serialisable():
    json.dumps(TABLE.to_dict())
