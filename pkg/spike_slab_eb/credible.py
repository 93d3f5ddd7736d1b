import numpy as np

from .models.model_utils import as_float_list
from .models.results import CredibleBall
from .posterior import posterior_median, sample_posterior, total_radius_q
from .utils import ConfigurationError, InvalidInputError

MIN_QUANTILE_DRAWS = 1000


def _check_q(q):
    q = float(q)
    if not 0.0 < q <= 2.0:
        raise ConfigurationError(f"q must lie in (0, 2], got {q}")
    return q


def dq_distance(a, b, q):
    """d_q(a, b) = sum_i |a_i - b_i|^q."""
    q = _check_q(q)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(f"vectors differ in length: {a.size} != {b.size}")
    return float(np.sum(np.abs(a - b) ** q))


def build_moment_ball(g, xs, q, M, alpha):
    """{theta: d_q(theta, median) <= M v_{q,alpha}(X)}; posterior mass >= 1 - 1/M by Markov."""
    q = _check_q(q)
    if not M >= 1:
        raise ConfigurationError(f"M must be at least 1, got {M}")
    center = posterior_median(g, np.asarray(xs, dtype=float), alpha)
    radius = float(M) * total_radius_q(g, xs, alpha, q, medians=center)
    return CredibleBall(q=q, center=as_float_list(np.atleast_1d(center)), radius=radius, multiplier_M=float(M),
                        alpha_used=float(alpha), radius_kind="moment")


def build_quantile_ball(g, xs, q, beta, alpha, draws, rng, inflation=1.0):
    """
    Ball around the posterior median whose radius is the smallest r with
    sampled posterior mass of {d_q(theta, median) <= r} at least 1 - beta,
    blown up by ``inflation``.
    """
    q = _check_q(q)
    if not 0.0 < beta < 1.0:
        raise ConfigurationError(f"beta must lie in (0, 1), got {beta}")
    if int(draws) < MIN_QUANTILE_DRAWS:
        raise InvalidInputError(f"quantile radius needs at least {MIN_QUANTILE_DRAWS} posterior draws, got {draws}")
    if not inflation >= 1:
        raise ConfigurationError(f"inflation must be at least 1, got {inflation}")
    center = np.atleast_1d(posterior_median(g, np.asarray(xs, dtype=float), alpha))
    losses = sample_posterior(g, xs, alpha, int(draws), rng, q=q, center=center)
    # inverted_cdf is the smallest sample value whose empirical CDF reaches 1 - beta
    r_beta = float(np.quantile(losses, 1.0 - beta, method="inverted_cdf"))
    return CredibleBall(q=q, center=as_float_list(center), radius=float(inflation) * r_beta, alpha_used=float(alpha),
                        radius_kind="quantile", beta=float(beta), inflation=float(inflation))


def inflate(ball, L):
    """The same ball with its radius multiplied by L >= 1."""
    if not L >= 1:
        raise ConfigurationError(f"inflation must be at least 1, got {L}")
    struct = ball.to_struct()
    struct["radius"] = ball.radius * float(L)
    struct["inflation"] = (ball.inflation or 1.0) * float(L)
    return CredibleBall(**struct)


def contains(ball, theta):
    # closed ball
    return dq_distance(theta, ball.center, ball.q) <= ball.radius


def diameter_bound(ball):
    """2 (2^{q-1} v 1) radius: any two members are at most this far apart in d_q."""
    return 2.0 * max(2.0 ** (ball.q - 1.0), 1.0) * ball.radius


def posterior_mass(g, ball, xs, draws, rng):
    """Fraction of ``draws`` posterior draws at alpha_used that land in the ball."""
    losses = sample_posterior(g, xs, ball.alpha_used, int(draws), rng, q=ball.q, center=np.asarray(ball.center))
    return float(np.mean(losses <= ball.radius))
