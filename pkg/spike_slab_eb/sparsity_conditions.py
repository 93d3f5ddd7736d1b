"""
Excessive-bias diagnostics, the testing condition and signal fixtures.

A signal theta0 satisfies the excessive-bias restriction EB(q) with
constants (A, C_q, D_q) at sparsity s when some ell in [ell_floor, s] has

    sum_{i: |theta_i| < A sqrt(2 log(n/ell))} |theta_i|^q <= D_q ell log^{q/2}(n/ell)
    |{i: |theta_i| >= A sqrt(2 log(n/ell))}| >= ell / C_q

The smallest such ell fixes the effective sparsity, the number of
coordinates above the detection level at that ell.
"""

import math

import numpy as np

from .models.results import EbConstants, EbReport, SignalSpec
from .score_thresholds import t_of
from .utils import ConfigurationError, InvalidInputError

ELL_FLOOR_RULES = ("log2", "natural", "one")


def ell_floor(n, rule="log2"):
    """Smallest admissible ell: ceil((log2 n)^2), ceil((log n)^2) or 1."""
    if rule == "log2":
        return int(math.ceil(math.log2(n) ** 2))
    if rule == "natural":
        return int(math.ceil(math.log(n) ** 2))
    if rule == "one":
        return 1
    raise ConfigurationError(f"ell_floor must be one of {', '.join(ELL_FLOOR_RULES)}, got '{rule}'")


def _signal(theta0):
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.ndim != 1 or theta0.size == 0:
        raise InvalidInputError(f"signal must be a non-empty vector, got shape {theta0.shape}")
    if not np.all(np.isfinite(theta0)):
        raise InvalidInputError("signal must be finite")
    return theta0


def check_eb(theta0, s, constants, ell_floor_rule="log2"):
    """
    Scan ell = ell_floor, ..., s for the first ell meeting both EB(q) inequalities.

    Magnitudes are sorted once; for each ell the detection level splits them
    with a binary search, and prefix sums of |theta|^q give the small-signal
    energy, so the scan costs O(n log n).
    """
    theta0 = _signal(theta0)
    if isinstance(constants, dict):
        constants = EbConstants(**constants)
    constants.validate()
    n = theta0.size
    s = int(s)
    if not 0 <= s <= n:
        raise ConfigurationError(f"s must lie in [0, n] = [0, {n}], got {s}")
    nonzero = int(np.count_nonzero(theta0))
    if nonzero > s:
        raise InvalidInputError(f"signal has {nonzero} nonzero coordinates, more than s = {s}")

    A, C, D, q = constants.A, constants.C_q, constants.D_q, constants.q
    floor = ell_floor(n, ell_floor_rule)
    magnitudes = np.sort(np.abs(theta0))
    energy = np.concatenate([[0.0], np.cumsum(magnitudes ** q)])

    report = EbReport(satisfied=False, ell_floor=floor, n=n, s=s, q=q)
    if floor > s:
        return report

    ells = np.arange(floor, s + 1)
    logs = np.log(n / ells)
    levels = A * np.sqrt(2.0 * logs)
    # ties at the level count as large
    small_counts = np.searchsorted(magnitudes, levels, side="left")
    small_energy = energy[small_counts]
    # zero coordinates never count as signals, even when the level is 0 at ell = n
    large_counts = n - np.maximum(small_counts, n - nonzero)
    admissible = (small_energy <= D * ells * logs ** (q / 2.0)) & (large_counts >= ells / C)
    if not np.any(admissible):
        return report

    first = int(np.argmax(admissible))
    report.satisfied = True
    report.smallest_ell = int(ells[first])
    report.effective_sparsity = int(large_counts[first])
    report.large_signal_count_at_ell = int(large_counts[first])
    report.small_signal_energy_at_ell = float(small_energy[first])
    return report


def check_testing_condition(theta0, s1, s2, c):
    """theta0 in T[s1, s2; c]: at most s2 nonzeros and squared distance to l0[s1] >= c (sqrt(n) ^ s2 log n)."""
    theta0 = _signal(theta0)
    n = theta0.size
    if not 0 <= s1 <= s2 <= n:
        raise InvalidInputError(f"need 0 <= s1 <= s2 <= n, got s1={s1}, s2={s2}, n={n}")
    if np.count_nonzero(theta0) > s2:
        return False
    squares = np.sort(np.square(theta0))
    distance = float(np.sum(squares[:n - int(s1)]))
    return distance >= c * min(math.sqrt(n), s2 * math.log(n))


def dyadic_levels(s):
    """Indices i = 1, ..., floor(log2 s) - 1 of the dyadic sparsities s_i = 2^i."""
    top = int(math.floor(math.log2(s))) - 1 if s >= 1 else 0
    return list(range(1, top + 1))


def in_dyadic_testing_class(theta0, s, c):
    """theta0 in the union of T[2^i, 2^{i+1}; c] over the dyadic levels of s."""
    theta0 = _signal(theta0)
    return any(check_testing_condition(theta0, 2 ** i, 2 ** (i + 1), c) for i in dyadic_levels(s))


def testing_counterexample(n, i):
    """theta^2 = n on the first 2^i coordinates, 1 on the next 2^i, 0 elsewhere."""
    block = 2 ** int(i)
    if 2 * block > n:
        raise ConfigurationError(f"level i={i} needs 2^{i + 1} <= n = {n}")
    theta0 = np.zeros(int(n))
    theta0[:block] = math.sqrt(n)
    theta0[block:2 * block] = 1.0
    return theta0


def random_testing_member(n, s, c, rng):
    """
    A random member of the dyadic testing class of s.

    At a random level i, 2^i coordinates sit in [2c log n, 4c log n) in
    squares and 2^i larger ones sit above them, so removing the 2^i largest
    leaves at least 2^{i+1} c log n of squared distance.
    """
    levels = dyadic_levels(s)
    if not levels:
        raise ConfigurationError(f"s = {s} has no dyadic level")
    block = 2 ** int(rng.choice(levels))
    base = 2.0 * c * math.log(n)
    theta0 = np.zeros(int(n))
    theta0[:block] = np.sqrt(2.0 * base * (1.0 + rng.random(block)))
    theta0[block:2 * block] = np.sqrt(base * (1.0 + rng.random(block)))
    return theta0 * rng.choice([-1.0, 1.0], size=int(n))


def _signs(rng, size):
    return rng.choice([-1.0, 1.0], size=size)


def generate_signal(spec, n, s, rng, g=None):
    """
    Build a signal of length n with exactly s nonzero coordinates (fewer
    only for the zero kind) on the first s indices.

    Kinds and the spec fields they read:
        zero             nothing
        flat             amplitude: every nonzero at amplitude * sqrt(2 log(n/s))
        adversarial      alpha: magnitudes uniform in [t(alpha)/8, t(alpha)/4]; needs g
        eb_tail          amplitude (A), D_q, q: half the signals at 2A sqrt(2 log(n/s)),
                         the rest a small tail using 90% of the D_q budget
        b0_construction  amplitude (A), s1, c: s1 coordinates at A sqrt(2 log(n/s1)),
                         s - s1 at c sqrt(2 log(n/s))
        eb_weaker        variant, m_n, amplitude (A), D_q: fixtures for the three
                         relaxed excessive-bias conditions
    """
    if isinstance(spec, dict):
        spec = SignalSpec(**spec)
    spec.validate()
    n, s = int(n), int(s)
    if not 0 <= s <= n:
        raise ConfigurationError(f"s must lie in [0, n] = [0, {n}], got {s}")
    theta0 = np.zeros(n)
    if spec.kind == "zero" or s == 0:
        return theta0

    level = math.sqrt(2.0 * math.log(n / s))
    if spec.kind == "flat":
        theta0[:s] = _required(spec, "amplitude") * level
    elif spec.kind == "adversarial":
        if g is None:
            raise ConfigurationError("adversarial signals need the convolved density to compute t(alpha)")
        threshold = t_of(g, _required(spec, "alpha"))
        theta0[:s] = rng.uniform(threshold / 8.0, threshold / 4.0, size=s)
    elif spec.kind == "eb_tail":
        theta0[:s] = _eb_tail(s, level, n, _required(spec, "amplitude"), _required(spec, "D_q"), spec.q or 2.0)
    elif spec.kind == "b0_construction":
        s1 = int(_required(spec, "s1"))
        if not 0 < s1 <= s:
            raise ConfigurationError(f"b0_construction needs 0 < s1 <= s, got s1={s1}")
        theta0[:s1] = _required(spec, "amplitude") * math.sqrt(2.0 * math.log(n / s1))
        theta0[s1:s] = _required(spec, "c") * level
    elif spec.kind == "eb_weaker":
        theta0[:s] = _eb_weaker(spec, s, level, n)
    return theta0 * np.concatenate([_signs(rng, s), np.ones(n - s)])


def _required(spec, name):
    value = getattr(spec, name)
    if value is None:
        raise ConfigurationError(f"signal kind '{spec.kind}' needs '{name}'")
    return value


def _eb_tail(s, level, n, A, D, q):
    large = int(math.ceil(s / 2))
    small = s - large
    values = np.full(s, 2.0 * A * level)
    if small:
        budget = 0.9 * D * s * math.log(n / s) ** (q / 2.0)
        # stay strictly below the detection level so the tail counts as small
        magnitude = min((budget / small) ** (1.0 / q), 0.5 * A * level)
        values[large:] = magnitude
    return values


def _eb_weaker(spec, s, level, n):
    """
    variant 1: small-signal energy m_n^{-1} s log(n/s) below the level A sqrt(2 log(n/s)),
               half the signals above it
    variant 2: only ceil(m_n s) signals above the level, the rest zero-energy small
    variant 3: every signal at 2 m_n sqrt(2 log(n/s)), above the relaxed level only
    """
    m_n = _required(spec, "m_n")
    if not 0 < m_n < 1:
        raise ConfigurationError(f"m_n must lie in (0, 1), got {m_n}")
    A = spec.amplitude or 2.0
    values = np.zeros(s)
    if spec.variant == 1:
        large = int(math.ceil(s / 2))
        values[:large] = 2.0 * A * level
        small = s - large
        if small:
            energy = s * level ** 2 / 2.0 / m_n
            values[large:] = min(math.sqrt(energy / small), 0.99 * A * level)
    elif spec.variant == 2:
        large = max(1, int(math.ceil(m_n * s)))
        values[:large] = 2.0 * A * level
        values[large:] = 1.0 / math.sqrt(n)
    elif spec.variant == 3:
        values[:] = 2.0 * m_n * level
    else:
        raise ConfigurationError(f"eb_weaker needs variant 1, 2 or 3, got {spec.variant}")
    return values
