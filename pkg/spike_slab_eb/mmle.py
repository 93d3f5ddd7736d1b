"""Marginal maximum likelihood for the prior weight alpha over [alpha_n, 1].

The score S(alpha) = sum_i B(X_i, alpha) is strictly decreasing, so the
maximiser of the marginal likelihood is the boundary point alpha_n when
S(alpha_n) <= 0, the point 1 when S(1) >= 0, and otherwise the unique root
of S, found with brentq.
"""

import math
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .models.results import MmleResult
from .score_thresholds import alpha_for_threshold
from .slab import log_phi
from .utils import ConfigurationError, InvalidInputError

XTOL = 1e-14
GRID_CHUNK = 256


def _observations(xs):
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1:
        raise InvalidInputError(f"observations must be a vector, got shape {xs.shape}")
    if not np.all(np.isfinite(xs)):
        raise InvalidInputError("observations must be finite")
    return xs


def sorted_log_ratios(g, xs):
    # summing in sorted order makes every sum below independent of the coordinate order
    return np.sort(np.asarray(g.log_ratio(_observations(xs)), dtype=float))


def _log_marginal(log_ratios, base, alpha):
    with np.errstate(divide="ignore"):
        mixture = np.logaddexp(np.log1p(-alpha), np.log(alpha) + log_ratios)
    return base + float(np.sum(mixture))


def _score(log_ratios, alpha):
    neg = -log_ratios
    return float(np.sum(-np.expm1(neg) / (alpha + (1.0 - alpha) * np.exp(neg))))


def _noise_log_likelihood(xs):
    return float(np.sum(np.sort(log_phi(_observations(xs)))))


def log_marginal(g, xs, alpha):
    """
    l(alpha) = sum_i log((1 - alpha) phi(x_i) + alpha g(x_i)),
    written as sum_i log phi(x_i) + sum_i logaddexp(log(1 - alpha), log alpha + L(x_i)).
    """
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha}")
    return _log_marginal(sorted_log_ratios(g, xs), _noise_log_likelihood(xs), alpha)


def score(g, xs, alpha):
    """S(alpha) = sum_i B(x_i)/(1 + alpha B(x_i))."""
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1], got {alpha}")
    return _score(sorted_log_ratios(g, xs), alpha)


@lru_cache(maxsize=128)
def alpha_n(g, n):
    """The lower end of the search interval: t(alpha_n) = sqrt(2 log n)."""
    n = int(n)
    if n < 2:
        raise InvalidInputError(f"need at least 2 observations, got {n}")
    return alpha_for_threshold(g, math.sqrt(2.0 * math.log(n)))


def fit_alpha(g, xs, verbose=False):
    xs = _observations(xs)
    n = xs.size
    if n < 2:
        raise InvalidInputError(f"need at least 2 observations, got {n}")
    log_ratios = sorted_log_ratios(g, xs)
    lower = alpha_n(g, n)

    at_lower = _score(log_ratios, lower)
    if at_lower <= 0:
        if verbose:
            print(f"\tS(alpha_n) = {at_lower:.6g} <= 0, alpha_hat = alpha_n = {lower:.6g}")
        return MmleResult(alpha_hat=lower, alpha_n=lower, at_lower_boundary=True, at_upper_boundary=False,
                          score_at_solution=at_lower, iterations=0)
    at_one = _score(log_ratios, 1.0)
    if at_one >= 0:
        if verbose:
            print(f"\tS(1) = {at_one:.6g} >= 0, alpha_hat = 1")
        return MmleResult(alpha_hat=1.0, alpha_n=lower, at_lower_boundary=False, at_upper_boundary=True,
                          score_at_solution=at_one, iterations=0)

    root, info = brentq(lambda a: _score(log_ratios, a), lower, 1.0, xtol=XTOL, maxiter=500, full_output=True)
    if verbose:
        print(f"\tS has its root at alpha_hat = {root:.6g} after {info.iterations} iterations")
    return MmleResult(alpha_hat=float(root), alpha_n=lower, at_lower_boundary=False, at_upper_boundary=False,
                      score_at_solution=_score(log_ratios, root), iterations=int(info.iterations))


def alpha_grid_argmax(g, xs, points=10000):
    """Maximiser of l(alpha) over a log-spaced grid of [alpha_n, 1]; an independent check on fit_alpha."""
    xs = _observations(xs)
    log_ratios = sorted_log_ratios(g, xs)
    grid = np.geomspace(alpha_n(g, xs.size), 1.0, int(points))
    values = np.empty(grid.size)
    with np.errstate(divide="ignore"):
        for start in range(0, grid.size, GRID_CHUNK):
            block = grid[start:start + GRID_CHUNK]
            mixture = np.logaddexp(np.log1p(-block)[:, None], np.log(block)[:, None] + log_ratios[None, :])
            values[start:start + GRID_CHUNK] = np.sum(mixture, axis=1)
    return float(grid[int(np.argmax(values))])
