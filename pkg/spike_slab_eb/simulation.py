"""
Monte Carlo experiments: frequentist coverage, radius, posterior risk and
point-estimator risk of the spike-and-slab empirical Bayes procedure.

A replicate draws X = theta0 + N(0, I_n) from its own counter-based stream,
picks alpha (marginal likelihood, fixed, or the oracle rate), builds the
credible ball around the posterior median and records whether it holds
theta0. Replicates are independent work items; with more than one worker
they run in a process pool and are re-sorted by index before aggregation.
"""

import itertools
import math
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache

import numpy as np
from scipy.stats import binomtest

from .configurator import Config
from .credible import build_quantile_ball, dq_distance
from .mmle import fit_alpha
from .models.model_utils import as_float_list, record_from_mapping
from .models.results import ExperimentConfig, ExperimentResult, ReplicateRecord
from .posterior import coordinate_radii, posterior_mean, posterior_median, total_radius_q
from .quadrature import QuadratureSpec
from .slab import SlabModel, build_density
from .sparsity_conditions import ell_floor, generate_signal
from .utils import ConfigurationError, NumericalError, replicate_generator

SIGNAL_STREAM = 0
NOISE_STREAM = 1
POSTERIOR_STREAM = 2

SWEEP_KEYS = ("n", "s", "M", "oracle_multiplier", "alpha", "q")

EXPERIMENT_DEFAULTS = {
    "study": "coverage",
    "q": 2.0,
    "family": "heavy_tail",
    "delta": 0.5,
    "scale": 1.0,
    "signal": {"kind": "flat", "amplitude": 2.0},
    "alpha_rule": "mmle",
    "radius_kind": "moment",
    "M": 20.0,
    "beta": 0.05,
    "inflation": 1.0,
    "replicates": 100,
    "seed": 0,
}


def expand_sweep(raw):
    """
    One experiment mapping per point of the cartesian product of the
    list-valued sweep keys; every point keeps the same seed.
    """
    swept = [key for key in SWEEP_KEYS if isinstance(raw.get(key), list)]
    if not swept:
        return [dict(raw)]
    points = []
    for values in itertools.product(*(raw[key] for key in swept)):
        point = dict(raw)
        point.update(zip(swept, values))
        points.append(point)
    return points


def resolve_config(config, settings=None):
    """Fill experiment defaults and validate into an ExperimentConfig."""
    if isinstance(config, ExperimentConfig):
        config = config.to_struct()
    settings = settings or Config()
    merged = {**EXPERIMENT_DEFAULTS, "draws": int(settings.quantile_draws), **config}
    if merged["study"] == "mean_suboptimality" and "signal" not in config:
        merged["signal"] = {"kind": "zero"}
    for key in ("n", "s", "replicates", "seed", "draws"):
        if key in merged and merged[key] is not None:
            merged[key] = int(merged[key])
    for key in ("q", "delta", "scale", "M", "beta", "inflation", "alpha", "oracle_multiplier"):
        if merged.get(key) is not None:
            merged[key] = float(merged[key])
    resolved = record_from_mapping(ExperimentConfig, merged)
    if resolved.s > resolved.n:
        raise ConfigurationError(f"s = {resolved.s} exceeds n = {resolved.n}")
    if resolved.study == "mean_suboptimality" and not resolved.q < 1:
        raise ConfigurationError(f"the posterior mean comparison needs q < 1, got q = {resolved.q}")
    if resolved.alpha_rule == "fixed" and resolved.alpha is None:
        raise ConfigurationError("alpha_rule 'fixed' needs 'alpha'")
    if resolved.alpha_rule == "oracle" and resolved.oracle_multiplier is None:
        raise ConfigurationError("alpha_rule 'oracle' needs 'oracle_multiplier'")
    return resolved


def slab_for(config, settings):
    return SlabModel(family=config.family, delta=config.delta, scale=config.scale,
                     quadrature=QuadratureSpec(**settings.quadrature_kwargs()))


@lru_cache(maxsize=8)
def _density(slab, n_max, grid_step, cache_dir, cache_expiration):
    return build_density(slab, n_max=n_max, grid_step=grid_step, cache_dir=cache_dir, cache_expiration=cache_expiration)


def density_for(config, settings, use_cache=True):
    n_max = max(int(settings.n_max), int(config.n))
    cache_dir = settings.cache_dir if use_cache else None
    return _density(slab_for(config, settings), n_max, float(settings.grid_step), cache_dir, int(settings.cache_expiration))


def oracle_alpha(n, s, delta, multiplier):
    """multiplier * s log^{delta/2}(n/s) / n, capped at 1."""
    if s == 0:
        raise ConfigurationError("the oracle alpha needs s > 0")
    return min(1.0, multiplier * s * math.log(n / s) ** (delta / 2.0) / n)


def experiment_signal(config, g):
    rng = replicate_generator(config.seed, 0, SIGNAL_STREAM)
    return generate_signal(config.signal, config.n, config.s, rng, g=g)


def run_replicate(config, g, theta0, replicate):
    """One replicate; numerical failures are recorded on the record, not raised."""
    noise = replicate_generator(config.seed, replicate, NOISE_STREAM)
    xs = theta0 + noise.standard_normal(config.n)
    q = config.q
    try:
        if config.alpha_rule == "mmle":
            alpha = fit_alpha(g, xs).alpha_hat
        elif config.alpha_rule == "fixed":
            alpha = config.alpha
        else:
            alpha = oracle_alpha(config.n, config.s, config.delta, config.oracle_multiplier)

        medians = posterior_median(g, xs, alpha)
        if config.radius_kind == "moment":
            radius = config.M * total_radius_q(g, xs, alpha, q, medians=medians)
        else:
            rng = replicate_generator(config.seed, replicate, POSTERIOR_STREAM)
            radius = build_quantile_ball(g, xs, q, config.beta, alpha, config.draws, rng, inflation=config.inflation).radius

        return ReplicateRecord(
            replicate=int(replicate),
            covered=bool(dq_distance(theta0, medians, q) <= radius),
            radius=float(radius),
            alpha_hat=float(alpha),
            risk_q=float(np.sum(coordinate_radii(g, xs, alpha, q, centers=theta0))),
            point_risk_median=dq_distance(medians, theta0, q),
            point_risk_mean=dq_distance(posterior_mean(g, xs, alpha), theta0, q),
        )
    except NumericalError as e:
        return ReplicateRecord(replicate=int(replicate), error=str(e))


def _replicate_worker(task):
    config_struct, settings_dict, use_cache, replicate = task
    settings = Config()
    settings.__dict__.update(settings_dict)
    config = ExperimentConfig(**config_struct)
    g = density_for(config, settings, use_cache)
    theta0 = experiment_signal(config, g)
    return run_replicate(config, g, theta0, replicate).to_struct()


def wilson_interval(successes, total, level=0.95):
    """Wilson score interval for a binomial proportion."""
    if total == 0:
        return (0.0, 1.0)
    ci = binomtest(int(successes), int(total)).proportion_ci(confidence_level=level, method="wilson")
    return (float(ci.low), float(ci.high))


def _mean(values):
    # fsum is exact, so the mean does not depend on the replicate order
    return math.fsum(values) / len(values) if values else float("nan")


def aggregate(config, records, warnings=(), settings=None):
    settings = settings or Config()
    records = sorted(records, key=lambda r: r.replicate)
    done = [r for r in records if r.error is None]
    covered = sum(1 for r in done if r.covered)
    mean_radius = _mean([r.radius for r in done])
    median_risk = _mean([r.point_risk_median for r in done])
    mean_risk = _mean([r.point_risk_mean for r in done])
    return ExperimentResult(
        config=config,
        coverage_rate=covered / len(done) if done else float("nan"),
        coverage_interval=as_float_list(wilson_interval(covered, len(done))),
        mean_radius=mean_radius,
        mean_diameter_bound=2.0 * max(2.0 ** (config.q - 1.0), 1.0) * mean_radius,
        mean_posterior_risk_q=_mean([r.risk_q for r in done]),
        mean_point_risk_median=median_risk,
        mean_point_risk_mean=mean_risk,
        mean_to_median_risk_ratio=mean_risk / median_risk if median_risk > 0 else float("nan"),
        mean_alpha_hat=_mean([r.alpha_hat for r in done]),
        completed_replicates=len(done),
        failed_replicates=len(records) - len(done),
        records=records,
        warnings=list(warnings),
        bands={
            "coverage_high_band": float(settings.coverage_high_band),
            "coverage_low_band": float(settings.coverage_low_band),
            "note": "desk-scale acceptance bands, not constants of the asymptotic theory",
        },
    )


def experiment_warnings(config, settings):
    warnings = []
    floor = ell_floor(config.n, settings.ell_floor)
    if config.s < floor:
        warnings.append(f"s = {config.s} is below the sparsity floor {floor} = ell_floor(n); "
                        "the marginal likelihood estimate is not covered by the theory there")
    return warnings


def run_experiment(config, settings=None, workers=None, use_cache=True, verbose=False):
    """
    Run every replicate of one experiment and aggregate.

    Parameters:
        config: ExperimentConfig or mapping, defaults filled by resolve_config
        settings: Config, read for quadrature, table and worker settings
        workers: process count, defaults to settings.workers
    """
    settings = settings or Config()
    config = resolve_config(config, settings)
    workers = int(workers or settings.workers or 1)
    warnings = experiment_warnings(config, settings)
    if verbose:
        for warning in warnings:
            print(f"\tWarning: {warning}")

    if workers > 1:
        if verbose:
            print(f"Running {config.replicates} replicates with {workers} parallel workers")
        tasks = [(config.to_struct(), dict(settings.__dict__), use_cache, r) for r in range(config.replicates)]
        ctx = mp.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            records = [ReplicateRecord(**r) for r in pool.map(_replicate_worker, tasks)]
    else:
        g = density_for(config, settings, use_cache)
        theta0 = experiment_signal(config, g)
        records = []
        for replicate in range(config.replicates):
            records.append(run_replicate(config, g, theta0, replicate))
            if verbose and (replicate + 1) % 10 == 0:
                print(f"\tFinished replicate {replicate + 1} of {config.replicates}")

    result = aggregate(config, records, warnings, settings)
    if verbose:
        print(f"Coverage {result.coverage_rate:.3f} over {result.completed_replicates} replicates, "
              f"{result.failed_replicates} failed")
    return result


def run_coverage(config, **kwargs):
    return run_experiment({**_as_mapping(config), "study": "coverage"}, **kwargs)


def run_risk(config, **kwargs):
    return run_experiment({**_as_mapping(config), "study": "risk"}, **kwargs)


def run_mean_suboptimality(config, **kwargs):
    """Posterior mean against posterior median d_q risk, q < 1; the ratio is on the result."""
    return run_experiment({**_as_mapping(config), "study": "mean_suboptimality"}, **kwargs)


def run_sweep(configs, **kwargs):
    """Run a list of experiment points (see expand_sweep) in order."""
    return [run_experiment(config, **kwargs) for config in configs]


def _as_mapping(config):
    return config.to_struct() if isinstance(config, ExperimentConfig) else dict(config)
