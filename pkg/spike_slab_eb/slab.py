"""Slab densities and the noise-convolved density g = phi * gamma.

g is needed millions of times (every observation, every candidate alpha,
every Monte Carlo replicate), so ``build_density`` tabulates log g, g'/g
and the slab-side fraction P(u > 0 | x) once on a symmetric grid and
interpolates with cubic splines; beyond the grid it falls back to direct
quadrature.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .families import SlabFamily, normalize_family
from .quadrature import QuadratureSpec, integrate
from .utils import ConfigurationError, NumericalError, format_float, load_from_cache, save_to_cache

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class SlabModel:
    family: str = "heavy_tail"
    delta: float = 0.5
    scale: float = 1.0
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        family = normalize_family(self.family)
        if family is None:
            raise ConfigurationError(f"Unknown slab family '{self.family}', expected one of {sorted(SlabFamily.registry)}")
        object.__setattr__(self, "family", family)
        if family == "heavy_tail" and not 0.0 < float(self.delta) < 2.0:
            raise ConfigurationError(f"heavy_tail slab needs delta in (0, 2), got {self.delta}")
        if not float(self.scale) > 0.0:
            raise ConfigurationError(f"slab scale must be positive, got {self.scale}")

    @property
    def impl(self):
        return SlabFamily.registry[self.family](delta=float(self.delta), scale=float(self.scale))

    def describe(self):
        if self.family == "heavy_tail":
            return f"heavy_tail(delta={self.delta:g})"
        if self.family == "laplace":
            return f"laplace(scale={self.scale:g})"
        return self.family


def log_phi(x):
    return -0.5 * np.square(x) - LOG_SQRT_2PI


def density(slab, u):
    """gamma(u) for the slab model."""
    return slab.impl.density(np.asarray(u, dtype=float))


def normalization_error(slab, radius=50.0):
    """|int gamma - 1|: quadrature on [-radius, radius] plus the analytic tail mass."""
    family = slab.impl
    spec = slab.quadrature
    breaks = np.linspace(-radius, radius, 21)[1:-1]
    inner = integrate(lambda u, rows: family.density(u), -radius, radius, breaks, spec.node_count)
    return abs(float(inner) + float(family.tail_mass(radius)) - 1.0)


def log_slope_bound(slab):
    """The finite constant sup_{u>0} |d/du log gamma(u)|."""
    return slab.impl.log_slope_bound()


def _convolution_moments(family, x, node_count, radius, lower_at_zero=False):
    """
    Direct quadrature of the integrals of phi(x-u) gamma(u) times 1 and (u - x).

    With ``lower_at_zero`` the range is cut to u > 0, which gives the slab
    side mass used for the tilted CDF at 0.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lower = x - radius
    if lower_at_zero:
        lower = np.maximum(lower, 0.0)
    upper = np.maximum(x + radius, lower)
    breaks = np.zeros(x.shape + (1,))

    def mass(u, rows):
        return np.exp(log_phi(x[rows, None] - u) + family.log_density(u))

    def first(u, rows):
        return (u - x[rows, None]) * np.exp(log_phi(x[rows, None] - u) + family.log_density(u))

    return (integrate(mass, lower, upper, breaks, node_count),
            integrate(first, lower, upper, breaks, node_count))


def convolve(slab, x, check=True):
    """
    g(x) = int phi(x - u) gamma(u) du by composite Gauss-Legendre on [x-R, x+R].

    With ``check`` the value is compared against the family's closed form,
    or recomputed with half the nodes when there is none, and a
    NumericalError is raised when the two disagree by more than the
    relative tolerance of the slab's quadrature spec.
    """
    spec = slab.quadrature
    family = slab.impl
    scalar = np.ndim(x) == 0
    x = np.abs(np.atleast_1d(np.asarray(x, dtype=float)))
    value, _ = _convolution_moments(family, x, spec.node_count, spec.truncation_radius)
    if check:
        reference = family.closed_form_convolution(x)
        if reference is None:
            reference, _ = _convolution_moments(family, x, max(spec.node_count // 2, 2), spec.truncation_radius)
        error = np.max(np.abs(value - reference) / value)
        if not error <= spec.relative_tolerance:
            raise NumericalError(
                f"g(x) did not converge with {spec.node_count} nodes per panel for {slab.describe()}",
                achieved_error=float(error),
            )
    return float(value[0]) if scalar else value


def log_ratio(slab, x):
    """log(g/phi)(x), computed from log g directly so phi(x) is never divided by."""
    g = convolve(slab, x)
    return np.log(g) - log_phi(np.asarray(x, dtype=float))


def tail_ratio(slab, x):
    """g(x)/gamma(x); bounded above and below for large |x| when the slab has polynomial tails."""
    return convolve(slab, x) / density(slab, x)


class ConvolvedDensity:
    """
    Tabulated g = phi * gamma for one slab model.

    Tables live on a symmetric grid over [-x_max, x_max] with
    x_max = sqrt(2 log n_max) + 6, so evenness of log g and oddness of g'/g
    are inherited by the splines. Instances are immutable after
    construction and safe to share between threads.
    """

    def __init__(self, slab, grid, log_g, score, upper):
        self.slab = slab
        self.family = slab.impl
        self.grid = np.asarray(grid, dtype=float)
        self.x_max = float(self.grid[-1])
        self._log_g = CubicSpline(self.grid, log_g)
        self._score = CubicSpline(self.grid, score)
        self._upper = CubicSpline(self.grid, upper)

    def __repr__(self):
        return f"ConvolvedDensity({self.slab.describe()}, x_max={self.x_max:.3f})"

    def _direct(self, x):
        spec = self.slab.quadrature
        mass, first = _convolution_moments(self.family, x, spec.node_count, spec.truncation_radius)
        upper, _ = _convolution_moments(self.family, x, spec.node_count, spec.truncation_radius, lower_at_zero=True)
        return np.log(mass), first / mass, upper / mass

    def _evaluate(self, x, which):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(x.shape)
        inside = np.abs(x) <= self.x_max
        spline = {0: self._log_g, 1: self._score, 2: self._upper}[which]
        out[inside] = spline(x[inside])
        if not np.all(inside):
            out[~inside] = self._direct(x[~inside])[which]
        return float(out[0]) if scalar else out

    def log_g(self, x):
        return self._evaluate(x, 0)

    def g(self, x):
        return np.exp(self.log_g(x))

    def log_ratio(self, x):
        return self.log_g(x) - log_phi(np.asarray(x, dtype=float))

    def score(self, x):
        """g'(x)/g(x)."""
        return self._evaluate(x, 1)

    def upper_fraction(self, x):
        """P(u > 0) under the tilted density gamma_x, i.e. 1 - Gamma_x(0)."""
        return self._evaluate(x, 2)

    def tilted_log_density(self, u, x):
        """log gamma_x(u) = log phi(x-u) + log gamma(u) - log g(x), broadcasting u against x."""
        x = np.asarray(x, dtype=float)
        return log_phi(x[..., None] - u) + self.family.log_density(u) - np.asarray(self.log_g(x))[..., None]


def grid_identifier(slab, n_max, grid_step):
    spec = slab.quadrature
    return (f"{slab.family}|delta={format_float(slab.delta)}|scale={format_float(slab.scale)}|nodes={int(spec.node_count)}"
            f"|R={format_float(spec.truncation_radius)}|n_max={int(n_max)}|step={format_float(grid_step)}")


def build_density(slab, n_max=1000000, grid_step=0.005, cache_dir=None, cache_expiration=86400, verbose=False):
    """
    Tabulate g for ``slab`` eagerly and return the ConvolvedDensity.

    The grid covers [0, sqrt(2 log n_max) + 6] and is mirrored; the three
    tables are read from and written to ``cache_dir`` when one is given.
    """
    if int(n_max) < 2:
        raise ConfigurationError(f"n_max must be at least 2, got {n_max}")
    x_max = math.sqrt(2.0 * math.log(n_max)) + 6.0
    half = np.arange(0.0, x_max + grid_step / 2, grid_step)
    grid = np.concatenate([-half[:0:-1], half])
    identifier = grid_identifier(slab, n_max, grid_step)

    tables = load_from_cache(identifier, cache_dir, cache_expiration, verbose=verbose) if cache_dir else None
    if tables is None or len(tables.get("log_g", [])) != len(half):
        if verbose:
            print(f"\tTabulating g for {slab.describe()} on {len(half)} points up to x={x_max:.2f}")
        # a spot check at the grid ends guards against a quadrature rule too coarse for the slab
        convolve(slab, np.array([0.0, x_max]), check=True)
        spec = slab.quadrature
        family = slab.impl
        mass, first = _convolution_moments(family, half, spec.node_count, spec.truncation_radius)
        upper, _ = _convolution_moments(family, half, spec.node_count, spec.truncation_radius, lower_at_zero=True)
        tables = {"log_g": np.log(mass), "score": first / mass, "upper": upper / mass}
        if cache_dir:
            save_to_cache(identifier, tables, cache_dir)

    # mirror: log g even, g'/g odd, P(u > 0 | -x) = 1 - P(u > 0 | x)
    log_g = np.concatenate([tables["log_g"][:0:-1], tables["log_g"]])
    score = np.concatenate([-tables["score"][:0:-1], tables["score"]])
    upper = np.concatenate([1.0 - tables["upper"][:0:-1], tables["upper"]])
    return ConvolvedDensity(slab, grid, log_g, score, upper)
