import math

import numpy as np
import pytest
from scipy import special

from cbe_pairstats.exact import asymptotic_variance, variance_pair_sum
from cbe_pairstats.functions import (
    CircleSeries,
    DivergentSeriesError,
    FunctionSpec,
    LineTransform,
    circle_coeffs,
    line_transform,
    scaled_coeffs,
)
from cbe_pairstats.limits import (
    LimitLaw,
    exp_series_law,
    exp_series_variance,
    logsine_mean_finite,
    logsine_variance,
    logsine_variance_finite,
    mean_large_n,
    meso_variance,
    micro_variance,
    micro_variance_terms,
    sample_limit_series,
    sample_limit_series_batch,
)

BUMP = line_transform(FunctionSpec.gaussian_bump(1.0))
TWO_COS = circle_coeffs(FunctionSpec.trigpoly([[1, 1.0]]))


# ---------------------------------------------------------------- global


def test_exp_series_variance_matches_beta_two_asymptotics():
    s = circle_coeffs(FunctionSpec.trigpoly([[1, 1.0], [2, -0.4], [5, 0.1]]))
    assert exp_series_variance(s, 2.0) == pytest.approx(asymptotic_variance(s), rel=1e-14)
    assert exp_series_variance(s, 1.0) == pytest.approx(4 * exp_series_variance(s, 2.0), rel=1e-14)


def test_exp_series_draws_have_the_right_moments():
    x = sample_limit_series_batch(TWO_COS, 2.0, None, 100_000, 3)
    assert abs(x.mean()) < 4 * 2.0 / math.sqrt(x.size)
    # Var of a centred Exp(1) sample variance: (mu_4 - 1) / n with mu_4 = 9
    assert abs(x.var() - 4.0) < 4 * 4.0 * math.sqrt(8.0 / x.size)


def test_exp_series_draws_reproducible():
    a = sample_limit_series(TWO_COS, 2.0, None, 9)
    b = sample_limit_series(TWO_COS, 2.0, None, 9)
    assert a == b


def test_zero_series_gives_zero_limit():
    zero = CircleSeries(np.zeros(4), 0.0, complete=True)
    assert exp_series_variance(zero, 2.0) == 0.0
    assert not np.any(sample_limit_series_batch(zero, 2.0, None, 10, 0))


def test_truncation_budget_enforced():
    s = circle_coeffs(FunctionSpec.trigpoly([[1, 1.0], [3, 1.0]]))
    with pytest.raises(ValueError):
        exp_series_law(s, 2.0, m_terms=2)
    assert exp_series_law(s, 2.0).m_terms == 3


def test_divergent_series_rejected():
    with pytest.raises(DivergentSeriesError):
        exp_series_law(circle_coeffs(FunctionSpec("logsine", {}), 4000), 2.0)


def test_limit_law_validation():
    with pytest.raises(ValueError):
        LimitLaw("cauchy", 1.0)
    with pytest.raises(ValueError):
        LimitLaw("gaussian", -1.0)
    draws = LimitLaw("gaussian", 4.0).sample(50_000, 1)
    assert draws.std() == pytest.approx(2.0, rel=0.02)


def test_bad_beta_rejected():
    for beta in (0.0, -2.0, float("nan")):
        with pytest.raises(ValueError):
            exp_series_variance(TWO_COS, beta)


def test_mean_large_n_at_beta_two_matches_exact_mean():
    from cbe_pairstats.exact import expected_pair_sum

    s = circle_coeffs(FunctionSpec.trigpoly([[0, 0.2], [1, 1.0], [4, -0.3]]))
    for n in (5, 10, 40):
        assert mean_large_n(s, 2.0, n) == pytest.approx(expected_pair_sum(s, n), abs=1e-12)


# ---------------------------------------------------------------- meso


def test_meso_variance_against_trapezoid():
    t = np.linspace(-12.0, 12.0, 240_001)
    y = (t * BUMP(t)) ** 2
    trap = float(np.sum((y[1:] + y[:-1]) * np.diff(t)) / 2)
    assert meso_variance(BUMP, 2.0) == pytest.approx(trap / math.pi, rel=1e-6)


def test_meso_variance_scales_with_beta():
    assert meso_variance(BUMP, 1.0) / meso_variance(BUMP, 2.0) == pytest.approx(4.0, rel=1e-13)


def test_meso_variance_of_zero_transform():
    zero = LineTransform(lambda t: np.zeros_like(np.asarray(t, dtype=float)), grid_radius=2.0, f_at_zero=0.0)
    assert meso_variance(zero, 2.0) == 0.0


def test_meso_variance_matches_exact_scaled_variance():
    for n, L in ((256, 16.0), (1024, 32.0)):
        exact = variance_pair_sum(scaled_coeffs(BUMP, L), n).total / L
        assert exact == pytest.approx(meso_variance(BUMP, 2.0), rel=1e-9)


def test_meso_table_uses_breakpoints():
    lt = line_transform(FunctionSpec.table(0.25, [1.0, 0.8, 0.5, 0.3, 0.1]))
    t = np.linspace(-1.25, 1.25, 500_001)
    y = (t * lt(t)) ** 2
    trap = float(np.sum((y[1:] + y[:-1]) * np.diff(t)) / 2)
    assert meso_variance(lt, 2.0) == pytest.approx(trap / math.pi, rel=1e-8)


# ---------------------------------------------------------------- micro


def test_micro_small_support_reduces_to_diagonal():
    lt = line_transform(FunctionSpec.table(0.1, [1.0, 0.5, 0.2, 0.1]))
    terms = micro_variance_terms(lt)
    assert terms.band == 0.0
    assert abs(terms.triangle) < 1e-15
    t = np.linspace(-0.4, 0.4, 400_001)
    y = (t * lt(t)) ** 2
    trap = float(np.sum((y[1:] + y[:-1]) * np.diff(t)) / 2)
    assert terms.variance == pytest.approx(trap / math.pi, rel=1e-8)


@pytest.mark.parametrize("width", [1.0, 4.0])
def test_micro_variance_matches_exact_finite_n(width):
    lt = line_transform(FunctionSpec.gaussian_bump(width))
    n = 2048
    exact = variance_pair_sum(scaled_coeffs(lt, n), n).total / n
    assert abs(micro_variance(lt) / exact - 1) <= 0.02


def test_single_triangle_form_is_off():
    lt = line_transform(FunctionSpec.gaussian_bump(1.0))
    n = 2048
    exact = variance_pair_sum(scaled_coeffs(lt, n), n).total / n
    terms = micro_variance_terms(lt)
    assert abs(terms.single_triangle_variance / exact - 1) > 0.2
    assert abs(terms.variance / exact - 1) < 1e-3


def test_micro_table_matches_exact():
    lt = line_transform(FunctionSpec.table(0.25, [1.0, 0.8, 0.5, 0.3, 0.1]))
    n = 1024
    exact = variance_pair_sum(scaled_coeffs(lt, n), n).total / n
    assert micro_variance(lt) == pytest.approx(exact, rel=1e-3)


# ---------------------------------------------------------------- log-sine


def test_logsine_variance_values():
    assert logsine_variance(2.0) == pytest.approx((2 - 2 * (math.pi**2 / 6 - 1)) / 8, rel=1e-14)
    assert logsine_variance(2.0) == pytest.approx(0.0887665, abs=1e-7)
    assert logsine_variance(4.0) > 0
    assert logsine_variance(1.0) > logsine_variance(2.0) > logsine_variance(4.0)


def test_trigamma_recurrence():
    for x in (0.5, 1.5, 2.0, 3.25):
        assert special.polygamma(1, x + 1) - special.polygamma(1, x) == pytest.approx(-1 / x**2, rel=1e-13)


@pytest.mark.parametrize("beta", [1.0, 2.0, 4.0])
def test_logsine_finite_variance_converges(beta):
    # the variance grows like N; its slope tends to the limit at rate 1/N
    gaps = [abs(logsine_variance_finite(beta, n) / n - logsine_variance(beta)) for n in (16, 128, 1024, 8192)]
    assert gaps[-1] < 1e-4
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_logsine_two_points_against_quadrature():
    # N = 2 CUE: the gap d has density (1 - cos d) / (2 pi) on [0, 2 pi) and
    # S = log|2 sin(d/2)|
    from scipy import integrate

    dens = lambda d: (1 - math.cos(d)) / (2 * math.pi)
    s = lambda d: math.log(2 * math.sin(d / 2))
    m1, _ = integrate.quad(lambda d: dens(d) * s(d), 0, 2 * math.pi, epsabs=1e-13, limit=200)
    m2, _ = integrate.quad(lambda d: dens(d) * s(d) ** 2, 0, 2 * math.pi, epsabs=1e-13, limit=200)
    assert logsine_mean_finite(2.0, 2) == pytest.approx(m1, abs=1e-10)
    assert logsine_variance_finite(2.0, 2) == pytest.approx(m2 - m1 * m1, abs=1e-10)
    assert logsine_mean_finite(2.0, 1) == 0.0
    assert logsine_variance_finite(2.0, 1) == pytest.approx(0.0, abs=1e-15)
