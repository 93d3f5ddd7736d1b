"""Score transforms B(x), B(x, alpha) and the thresholds zeta, tau and t.

All three thresholds solve a monotone equation in x >= 0 on the log scale
of g/phi, L(x) = log(g/phi)(x):

    zeta(alpha):  L(x) = log(1 + 1/alpha)          (B(x) = 1/alpha)
    tau(alpha):   L(x) = log((1 - alpha)/alpha)     (a(x) = 1/2)
    t(alpha):     a(x) * P(u > 0 | x) = 1/2         (median leaves 0)

and are found with scipy's brentq after a geometric bracket expansion.
"""

import math
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, logit

from .models.model_utils import as_float_list
from .models.results import MomentDiagnostics, MomentPoint, ThresholdTriple
from .quadrature import integrate
from .slab import log_phi
from .utils import ConfigurationError, InvalidInputError, NumericalError

XTOL = 1e-13
MOMENT_HALF_WIDTH = 12.0


def _check_alpha(alpha, allow_one=True):
    alpha = float(alpha)
    upper_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (alpha > 0.0 and upper_ok):
        raise ConfigurationError(f"alpha must lie in (0, {'1]' if allow_one else '1)'}, got {alpha}")
    return alpha


def _solve_increasing(fn, lower, guess, what, max_doublings=60):
    """Root of an increasing fn on [lower, inf) with fn(lower) < 0."""
    upper = max(guess, lower + 1.0)
    for _ in range(max_doublings):
        if fn(upper) > 0:
            return brentq(fn, lower, upper, xtol=XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
        lower, upper = upper, 2.0 * upper
    raise NumericalError(f"could not bracket {what}", achieved_error=float("inf"))


def score_b(g, x):
    """B(x) = (g/phi)(x) - 1."""
    return np.expm1(g.log_ratio(x))


def score_b_alpha(g, x, alpha):
    """
    B(x)/(1 + alpha B(x)), evaluated as -expm1(-L)/(alpha + (1 - alpha) e^{-L}).

    The rearranged form never builds e^L, so it tends to 1/alpha instead of
    overflowing for large |x|.
    """
    alpha = _check_alpha(alpha)
    neg = -np.asarray(g.log_ratio(x))
    denominator = alpha + (1.0 - alpha) * np.exp(neg)
    assert np.all(denominator > 0), "1 + alpha B(x) must stay positive"
    out = -np.expm1(neg) / denominator
    return float(out) if np.ndim(out) == 0 else out


def zeta_of(g, alpha):
    alpha = _check_alpha(alpha)
    target = math.log1p(1.0 / alpha)
    if g.log_ratio(0.0) >= target:
        raise InvalidInputError(f"1/alpha = {1.0 / alpha:.6g} does not exceed B(0); zeta is undefined")
    guess = math.sqrt(2.0 * math.log1p(1.0 / alpha)) + 10.0
    return _solve_increasing(lambda x: g.log_ratio(x) - target, 0.0, guess, f"zeta({alpha:g})")


def _tau_exact(g, alpha):
    target = -logit(alpha)
    if g.log_ratio(0.0) >= target:
        return 0.0
    guess = math.sqrt(2.0 * max(target, 1.0)) + 10.0
    return _solve_increasing(lambda x: g.log_ratio(x) - target, 0.0, guess, f"tau({alpha:g})")


@lru_cache(maxsize=64)
def alpha_zero(g):
    """alpha_0 with tau(alpha_0) = 1, i.e. logit(alpha_0) = -L(1)."""
    return float(expit(-g.log_ratio(1.0)))


def tau_of(g, alpha):
    """tau(min(alpha, alpha_0)): the point where the slab weight a(x) is 1/2, floored at 1."""
    alpha = _check_alpha(alpha)
    return _tau_exact(g, min(alpha, alpha_zero(g)))


def median_leaves_zero(g, x, alpha):
    """a(x) * P(u > 0 | x) - 1/2; negative exactly where the posterior median of x >= 0 is 0."""
    weight = expit(g.log_ratio(x) + logit(alpha))
    return weight * g.upper_fraction(x) - 0.5


def t_of(g, alpha):
    alpha = _check_alpha(alpha, allow_one=False)
    guess = math.sqrt(2.0 * math.log(1.0 / alpha)) + 10.0
    return _solve_increasing(lambda x: median_leaves_zero(g, x, alpha), 0.0, guess, f"t({alpha:g})")


def alpha_for_threshold(g, t):
    """
    Invert t(.) at ``t``: the alpha whose posterior median starts moving at t.

    At the threshold a(t) P(u > 0 | t) = 1/2, and a(t) = expit(L(t) + logit alpha),
    so logit alpha = -log(2 P(u > 0 | t) - 1) - L(t).
    """
    t = float(t)
    if not t > 0:
        raise InvalidInputError(f"threshold must be positive, got {t}")
    upper = g.upper_fraction(t)
    if not upper > 0.5:
        raise NumericalError(f"P(u > 0 | {t:g}) = {upper:.6g} does not exceed 1/2", achieved_error=float(0.5 - upper))
    return float(expit(-math.log(2.0 * upper - 1.0) - g.log_ratio(t)))


def threshold_triple(g, alpha):
    alpha = _check_alpha(alpha, allow_one=False)
    return ThresholdTriple(alpha=alpha, zeta=float(zeta_of(g, alpha)), tau=float(tau_of(g, alpha)), t=float(t_of(g, alpha)))


def _gaussian_expectations(g, alpha, mus, zeta):
    mus = np.asarray(mus, dtype=float)
    node_count = g.slab.quadrature.node_count
    breaks = np.broadcast_to(np.array([-zeta, 0.0, zeta]), mus.shape + (3,))

    def first(x, rows):
        return np.exp(log_phi(x - mus[rows, None])) * score_b_alpha(g, x, alpha)

    def second(x, rows):
        return np.exp(log_phi(x - mus[rows, None])) * np.square(score_b_alpha(g, x, alpha))

    lower, upper = mus - MOMENT_HALF_WIDTH, mus + MOMENT_HALF_WIDTH
    return integrate(first, lower, upper, breaks, node_count), integrate(second, lower, upper, breaks, node_count)


def m_tilde(g, alpha):
    """
    -E_0 B(X, alpha), nonnegative since it equals E_0[alpha B^2/(1 + alpha B)].

    The second form behaves like g(x) for large |x| and loses the slab tail
    to any truncation, so the first is integrated; its integrand is at most
    phi(x)/alpha.
    """
    alpha = _check_alpha(alpha)
    try:
        zeta = zeta_of(g, alpha)
    except InvalidInputError:
        zeta = 1.0

    def integrand(x, rows):
        return -np.exp(log_phi(x)) * score_b_alpha(g, x, alpha)

    breaks = np.array([-zeta, 0.0, zeta])
    value = float(integrate(integrand, -MOMENT_HALF_WIDTH, MOMENT_HALF_WIDTH, breaks, g.slab.quadrature.node_count))
    # round-off can leave a tiny negative value when alpha is close to 1
    return max(value, 0.0)


def moments(g, alpha, mus):
    """
    m_tilde(alpha), and m1(mu, alpha) = E_mu B(X, alpha), m2(mu, alpha) = E_mu B(X, alpha)^2
    for each mu, by composite Gauss-Legendre on [mu - 12, mu + 12] split at 0 and +-zeta(alpha).
    """
    alpha = _check_alpha(alpha, allow_one=False)
    mus = as_float_list(mus)
    zeta = zeta_of(g, alpha)
    m1, m2 = _gaussian_expectations(g, alpha, mus, zeta)
    # B(., alpha) <= 1/alpha pointwise; clip quadrature round-off
    m1 = np.minimum(m1, 1.0 / alpha)
    m2 = np.minimum(m2, 1.0 / alpha ** 2)
    points = [MomentPoint(mu=mu, m1=float(a), m2=float(b)) for mu, a, b in zip(mus, m1, m2)]
    return MomentDiagnostics(alpha=alpha, m_tilde=m_tilde(g, alpha), points=points)


def alpha_tilde(g, s_tilde, n, d):
    """
    Solve d * alpha * m_tilde(alpha) = s_tilde / n for alpha.

    A diagnostic for where the marginal likelihood estimate is expected to
    land; ``d`` has no default.
    """
    if not d > 0:
        raise ConfigurationError(f"d must be positive, got {d}")
    if not 0 < s_tilde <= n:
        raise ConfigurationError(f"s_tilde must lie in (0, n], got {s_tilde}")
    target = float(s_tilde) / float(n)

    def gap(log_alpha):
        alpha = math.exp(log_alpha)
        return d * alpha * m_tilde(g, alpha) - target

    lower, upper = math.log(1e-12), math.log(0.999)
    if gap(lower) > 0 or gap(upper) < 0:
        raise NumericalError(f"d * alpha * m_tilde(alpha) does not cross {target:.6g} on [1e-12, 0.999]")
    return math.exp(brentq(gap, lower, upper, xtol=1e-12))
