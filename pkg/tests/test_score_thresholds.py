import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import expit, logit

from spike_slab_eb.posterior import posterior_median, slab_weight
from spike_slab_eb.score_thresholds import (
    alpha_for_threshold, alpha_tilde, alpha_zero, m_tilde, median_leaves_zero, moments, score_b, score_b_alpha, t_of,
    tau_of, threshold_triple, zeta_of,
)
from spike_slab_eb.utils import ConfigurationError

ALPHAS = [10.0 ** -k for k in range(1, 9)]


def test_score_b_alpha_matches_the_direct_formula(g_half):
    xs = np.array([0.0, 0.8, 2.0, 4.5])
    alpha = 0.01
    b = score_b(g_half, xs)
    assert score_b_alpha(g_half, xs, alpha) == pytest.approx(b / (1 + alpha * b), rel=1e-12)


def test_score_b_alpha_saturates_without_overflow(g_half):
    alpha = 1e-4
    value = score_b_alpha(g_half, 40.0, alpha)
    assert math.isfinite(value)
    assert value == pytest.approx(1 / alpha, rel=1e-12)


def test_score_b_alpha_is_bounded(g_half):
    xs = np.linspace(-12, 12, 241)
    alpha = 0.05
    values = score_b_alpha(g_half, xs, alpha)
    assert np.all(values <= 1 / alpha)
    assert np.all(values >= -1 / (1 - alpha))


def test_score_b_alpha_rejects_alpha_outside_unit_interval(g_half):
    with pytest.raises(ConfigurationError):
        score_b_alpha(g_half, 1.0, 1.5)
    with pytest.raises(ConfigurationError):
        zeta_of(g_half, 0.0)


@pytest.mark.parametrize("alpha", [1e-2, 1e-4, 1e-6])
def test_zeta_solves_its_defining_equation(g_half, alpha):
    zeta = zeta_of(g_half, alpha)
    assert score_b(g_half, zeta) * alpha == pytest.approx(1.0, abs=1e-10)


def test_zeta_is_decreasing_in_alpha(g_half):
    values = [zeta_of(g_half, alpha) for alpha in (1e-6, 1e-4, 1e-2)]
    assert values[0] > values[1] > values[2]


@pytest.mark.parametrize("fixture", ["g_fifth", "g_half", "g_one"])
def test_zeta_grows_like_the_gaussian_quantile(request, fixture):
    g = request.getfixturevalue(fixture)
    delta = g.slab.delta
    for alpha in [10.0 ** -k for k in range(2, 9)]:
        gap = zeta_of(g, alpha) ** 2 - 2 * math.log(1 / alpha)
        assert -5 <= gap <= (1 + delta) * math.log(math.log(1 / alpha)) + 5


def test_tau_sets_the_slab_weight_to_one_half(g_half):
    alpha = 1e-3
    assert slab_weight(g_half, tau_of(g_half, alpha), alpha) == pytest.approx(0.5, abs=1e-10)


def test_tau_is_capped_below_at_one(g_half):
    a0 = alpha_zero(g_half)
    assert 0 < a0 < 1
    assert tau_of(g_half, a0) == pytest.approx(1.0, abs=1e-10)
    assert tau_of(g_half, min(0.99, 2 * a0)) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("fixture", ["g_fifth", "g_half", "g_one"])
def test_tau_grows_like_the_gaussian_quantile(request, fixture):
    g = request.getfixturevalue(fixture)
    delta = g.slab.delta
    for alpha in [10.0 ** -k for k in range(2, 9)]:
        gap = tau_of(g, alpha) ** 2 - 2 * math.log(1 / alpha)
        assert -5 <= gap <= (1 + delta) * math.log(math.log(1 / alpha)) + 5


@pytest.mark.parametrize("fixture", ["g_fifth", "g_half", "g_one"])
@pytest.mark.parametrize("alpha", ALPHAS)
def test_threshold_ordering(request, fixture, alpha):
    g = request.getfixturevalue(fixture)
    triple = threshold_triple(g, alpha)
    assert triple.tau <= triple.t <= triple.zeta
    assert median_leaves_zero(g, triple.t, alpha) == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("alpha", [1e-2, 1e-4, 1e-6])
def test_median_thresholds_exactly_at_t(g_half, alpha):
    t = t_of(g_half, alpha)
    below = posterior_median(g_half, np.array([0.99 * t, -0.99 * t]), alpha)
    above = posterior_median(g_half, np.array([1.01 * t, -1.01 * t]), alpha)
    assert np.all(below == 0.0)
    assert above[0] > 0 and above[1] < 0


def test_t_is_decreasing_in_alpha(g_half):
    values = [t_of(g_half, alpha) for alpha in ALPHAS]
    assert all(a < b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("n", [100, 2000, 10 ** 6])
def test_alpha_for_threshold_round_trip(g_half, n):
    target = math.sqrt(2 * math.log(n))
    alpha = alpha_for_threshold(g_half, target)
    assert t_of(g_half, alpha) == pytest.approx(target, abs=1e-8)


def test_t_rejects_alpha_one(g_half):
    with pytest.raises(ConfigurationError):
        t_of(g_half, 1.0)


def _expected_b_alpha(g, alpha, mu, power):
    fn = lambda x: math.exp(-0.5 * (x - mu) ** 2) / math.sqrt(2 * math.pi) * score_b_alpha(g, x, alpha) ** power
    zeta = zeta_of(g, alpha)
    edges = sorted({mu - 12, -zeta, 0.0, zeta, mu + 12})
    edges = [e for e in edges if mu - 12 <= e <= mu + 12]
    return sum(quad(fn, a, b, epsabs=0, epsrel=1e-11, limit=200)[0] for a, b in zip(edges[:-1], edges[1:]))


@pytest.mark.parametrize("alpha", [1e-2, 1e-4])
def test_m_tilde_is_nonnegative_and_equals_minus_null_mean(g_half, alpha):
    value = m_tilde(g_half, alpha)
    assert value >= 0
    assert value == pytest.approx(-_expected_b_alpha(g_half, alpha, 0.0, 1), rel=1e-5)


def test_m_tilde_is_increasing_in_alpha(g_half):
    values = [m_tilde(g_half, alpha) for alpha in (1e-5, 1e-4, 1e-3, 1e-2)]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_m_tilde_scales_like_zeta_to_minus_delta(g_half):
    delta = g_half.slab.delta
    scaled = [m_tilde(g_half, a) * delta * zeta_of(g_half, a) ** delta for a in (1e-3, 1e-4, 1e-5)]
    assert max(scaled) / min(scaled) < 2.0


def test_moments_against_adaptive_quadrature(g_half):
    alpha = 1e-3
    diagnostics = moments(g_half, alpha, [0.0, 2.0, 5.0])
    for mu in (0.0, 2.0, 5.0):
        assert diagnostics.m1_at(mu) == pytest.approx(_expected_b_alpha(g_half, alpha, mu, 1), rel=1e-7, abs=1e-10)
        assert diagnostics.m2_at(mu) == pytest.approx(_expected_b_alpha(g_half, alpha, mu, 2), rel=1e-7)
    assert diagnostics.m1_at(0.0) == pytest.approx(-diagnostics.m_tilde, rel=1e-6)


def test_moments_respect_the_saturation_bound(g_half):
    alpha = 1e-2
    diagnostics = moments(g_half, alpha, [0.0, 10.0, 30.0])
    for point in diagnostics.points:
        assert point.m1 <= 1 / alpha
        assert point.m2 <= 1 / alpha ** 2
    assert diagnostics.m1_at(30.0) == pytest.approx(1 / alpha, rel=1e-9)


@pytest.mark.parametrize("alpha", [1e-1, 1e-3, 1e-5])
def test_m1_is_bounded_and_nondecreasing_in_mu(g_half, alpha):
    mus = np.linspace(0.0, 2 * zeta_of(g_half, alpha), 9)
    diagnostics = moments(g_half, alpha, mus)
    m1 = [p.m1 for p in diagnostics.points]
    assert all(b >= a - 1e-9 * max(abs(a), 1.0) for a, b in zip(m1, m1[1:]))
    for mu in mus[::2]:
        assert _expected_b_alpha(g_half, alpha, mu, 1) <= (1 + 1e-9) / alpha
        assert _expected_b_alpha(g_half, alpha, mu, 2) <= (1 + 1e-9) / alpha ** 2
    assert moments(g_half, alpha, [-mus[3]]).points[0].m1 == pytest.approx(m1[3], rel=1e-10, abs=1e-12)


def test_m1_at_zeta_approaches_one_half_over_alpha(g_half):
    values = [moments(g_half, a, [zeta_of(g_half, a)]).points[0].m1 * a for a in (1e-3, 1e-4, 1e-5, 1e-6)]
    gaps = [abs(v - 0.5) for v in values]
    assert all(a >= b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.1


def test_alpha_tilde_solves_its_equation(g_half):
    n, s_tilde, d = 2000, 50, 2.0
    alpha = alpha_tilde(g_half, s_tilde, n, d)
    assert d * alpha * m_tilde(g_half, alpha) == pytest.approx(s_tilde / n, rel=1e-8)


def test_alpha_tilde_needs_positive_d(g_half):
    with pytest.raises(ConfigurationError):
        alpha_tilde(g_half, 10, 100, 0.0)


def test_slab_weight_formula(g_half):
    alpha, x = 0.02, 1.7
    expected = alpha * g_half.g(x) / ((1 - alpha) * math.exp(-x * x / 2) / math.sqrt(2 * math.pi) + alpha * g_half.g(x))
    assert slab_weight(g_half, x, alpha) == pytest.approx(expected, rel=1e-12)
    assert slab_weight(g_half, x, alpha) == pytest.approx(expit(g_half.log_ratio(x) + logit(alpha)), rel=1e-15)
