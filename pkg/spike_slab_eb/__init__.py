import sys
import time
import argparse
import contextlib
from pathlib import Path
from datetime import datetime

import numpy as np
import yaml
from jsonmodels.errors import ValidationError

from .version import __version__
from .configurator import Config
from .utils import ConfigurationError, InvalidInputError, NumericalError, ParseError, format_float, replicate_generator
from .slab import SlabModel, build_density
from .quadrature import QuadratureSpec
from .score_thresholds import threshold_triple, t_of
from .posterior import posterior_median, total_radius_q
from .mmle import fit_alpha
from .sparsity_conditions import ELL_FLOOR_RULES, check_eb, generate_signal
from .simulation import expand_sweep, run_sweep
from .models.model_utils import field_names
from .models.results import EbConstants, ExperimentConfig, FitReport, RunManifest, SIGNAL_KINDS
from spike_slab_eb.inputs.vectors import VectorFile
from spike_slab_eb.outputs.reports import ReportWriter

EXIT_OK = 0
EXIT_NOT_SATISFIED = 1
EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

REPLICATE_COLUMNS = ["replicate", "covered", "radius", "alpha_hat", "risk_q", "point_risk_median", "point_risk_mean"]
SUMMARY_COLUMNS = [
    "point", "study", "n", "s", "q", "M", "alpha_rule", "coverage_rate", "coverage_low", "coverage_high",
    "mean_radius", "mean_diameter_bound", "mean_posterior_risk_q", "mean_point_risk_median", "mean_point_risk_mean",
    "mean_to_median_risk_ratio", "mean_alpha_hat", "completed_replicates", "failed_replicates",
]


def parse_args(args=None):
    parser = argparse.ArgumentParser(prog="spikeslab", description="Spike-and-slab empirical Bayes for sparse normal means.")
    parser.add_argument('--version', action='version', version=f'spike_slab_eb {__version__}')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-v', '--verbose', action="store_true")
    common.add_argument('-nc', '--no-cache', action="store_true", help="Do not read or write tabulated g tables.")
    common.add_argument('--out', metavar="DIR", help="Directory for output files; reports also go to stdout.")
    common.add_argument('--seed', type=int)

    slab = argparse.ArgumentParser(add_help=False)
    slab.add_argument('--family', default="heavy_tail", help="heavy_tail, cauchy or laplace")
    slab.add_argument('--delta', type=float, default=0.5, help="heavy_tail exponent in (0, 2)")
    slab.add_argument('--scale', type=float, default=1.0, help="laplace scale")

    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", parents=[common, slab], help="Fit alpha by marginal likelihood and build the credible ball.")
    fit.add_argument("data", metavar="PATH", help="One real per line, or a single-column CSV.")
    fit.add_argument("--q", type=float, default=2.0)
    fit.add_argument("--M", type=float, default=20.0)
    fit.add_argument("--name", default="fit", help="Stem of the files written to --out.")

    simulate = commands.add_parser("simulate", parents=[common], help="Run a Monte Carlo experiment from a YAML or JSON config.")
    simulate.add_argument("config", metavar="PATH")
    simulate.add_argument("--workers", type=int)

    check = commands.add_parser("check-eb", parents=[common], help="Check the excessive-bias restriction of a signal.")
    check.add_argument("theta", metavar="PATH")
    check.add_argument("--A", type=float, required=True)
    check.add_argument("--Cq", type=float, required=True)
    check.add_argument("--Dq", type=float, required=True)
    check.add_argument("--q", type=float, default=2.0)
    check.add_argument("--s", type=int, required=True)
    check.add_argument("--ell-floor", choices=ELL_FLOOR_RULES)

    thresholds = commands.add_parser("thresholds", parents=[common, slab], help="Tabulate zeta, tau and t over a log grid of alpha.")
    thresholds.add_argument("--alpha-min", type=float, default=1e-8)
    thresholds.add_argument("--alpha-max", type=float, default=1e-1)
    thresholds.add_argument("--points", type=int, default=29)

    gtable = commands.add_parser("gtable", parents=[common, slab], help="Tabulate g, log(g/phi) and g'/g.")
    gtable.add_argument("--x-max", type=float, default=10.0)
    gtable.add_argument("--step", type=float, default=0.1)

    signal = commands.add_parser("signal", parents=[common, slab], help="Write a generated signal as a vector file.")
    signal.add_argument("--kind", choices=SIGNAL_KINDS, required=True)
    signal.add_argument("--n", type=int, required=True)
    signal.add_argument("--s", type=int, required=True)
    signal.add_argument("--amplitude", type=float)
    signal.add_argument("--alpha", type=float)
    signal.add_argument("--Dq", type=float)
    signal.add_argument("--q", type=float)
    signal.add_argument("--s1", type=int)
    signal.add_argument("--c", type=float)
    signal.add_argument("--variant", type=int)
    signal.add_argument("--m-n", type=float)
    signal.add_argument("--name", default="signal")
    signal.set_defaults(seed=0)

    return parser.parse_args(args)


def slab_from_args(args, config):
    return SlabModel(family=args.family, delta=args.delta, scale=args.scale, quadrature=QuadratureSpec(**config.quadrature_kwargs()))


def density_from_args(args, config, n=0):
    cache_dir = None if args.no_cache else config.cache_dir
    return build_density(slab_from_args(args, config), n_max=max(int(config.n_max), int(n), 2), grid_step=float(config.grid_step),
                         cache_dir=cache_dir, cache_expiration=int(config.cache_expiration), verbose=args.verbose)


def manifest_for(args, start_time, warnings=()):
    settings = {k: v for k, v in vars(args).items() if v is not None}
    return RunManifest(
        tool_version=__version__,
        command=args.command,
        config=settings,
        seed=args.seed,
        started=datetime.fromtimestamp(start_time).isoformat(),
        finished=datetime.now().isoformat(),
        warnings=list(warnings),
    )


def cmd_fit(args, config, stdout, start_time):
    xs = VectorFile(args.data, verbose=args.verbose).read()
    g = density_from_args(args, config, xs.size)
    if args.verbose:
        print(f"Fitting alpha to {xs.size} observations with a {g.slab.describe()} slab")
    mmle = fit_alpha(g, xs, verbose=args.verbose)
    alpha = mmle.alpha_hat
    medians = posterior_median(g, xs, alpha)
    radius = total_radius_q(g, xs, alpha, args.q, medians=medians)

    writer = ReportWriter(args.out, verbose=args.verbose)
    theta_hat_name = f"{args.name}.theta_hat.txt"
    manifest_name = f"{args.name}.manifest.yml"
    report = FitReport(
        n=int(xs.size),
        slab=g.slab.describe(),
        alpha_hat=alpha,
        alpha_n=mmle.alpha_n,
        at_lower_boundary=mmle.at_lower_boundary,
        at_upper_boundary=mmle.at_upper_boundary,
        score_at_solution=mmle.score_at_solution,
        # the median never thresholds at alpha = 1
        threshold=float(t_of(g, alpha)) if alpha < 1 else 0.0,
        q=float(args.q),
        M=float(args.M),
        radius_v=radius,
        ball_radius=float(args.M) * radius,
        nonzero_count=int(np.count_nonzero(medians)),
        theta_hat_path=theta_hat_name if args.out else None,
        manifest=manifest_name if args.out else None,
    )
    writer.write_vector(medians, theta_hat_name)
    stdout.write(writer.write_report(report, f"{args.name}.report.yml"))
    writer.write_manifest(manifest_for(args, start_time), manifest_name)
    return EXIT_OK


def cmd_simulate(args, config, stdout, start_time):
    raw = Config.read_experiment(args.config, field_names(ExperimentConfig), verbose=args.verbose)
    if args.seed is not None:
        raw["seed"] = args.seed
    points = expand_sweep(raw)
    if args.verbose:
        print(f"Running {len(points)} experiment point(s)")
    results = run_sweep(points, settings=config, workers=args.workers, use_cache=not args.no_cache, verbose=args.verbose)

    stem = Path(args.config).stem
    writer = ReportWriter(args.out, verbose=args.verbose)
    summary = []
    warnings = []
    for index, result in enumerate(results):
        name = f"{stem}.replicates.csv" if len(results) == 1 else f"{stem}.point{index}.replicates.csv"
        writer.write_csv([record.to_struct() for record in result.records], REPLICATE_COLUMNS, name)
        point = result.config
        low, high = result.coverage_interval
        summary.append({
            "point": index, "study": point.study, "n": point.n, "s": point.s, "q": point.q, "M": point.M,
            "alpha_rule": point.alpha_rule, "coverage_rate": result.coverage_rate, "coverage_low": low, "coverage_high": high,
            "mean_radius": result.mean_radius, "mean_diameter_bound": result.mean_diameter_bound,
            "mean_posterior_risk_q": result.mean_posterior_risk_q, "mean_point_risk_median": result.mean_point_risk_median,
            "mean_point_risk_mean": result.mean_point_risk_mean, "mean_to_median_risk_ratio": result.mean_to_median_risk_ratio,
            "mean_alpha_hat": result.mean_alpha_hat, "completed_replicates": result.completed_replicates,
            "failed_replicates": result.failed_replicates,
        })
        warnings.extend(result.warnings)
    stdout.write(writer.write_csv(summary, SUMMARY_COLUMNS, f"{stem}.summary.csv"))
    manifest = manifest_for(args, start_time, warnings)
    manifest.config = {**manifest.config, "experiment": raw, "bands": results[0].bands if results else {}}
    writer.write_manifest(manifest, f"{stem}.manifest.yml")
    return EXIT_OK


def cmd_check_eb(args, config, stdout, start_time):
    theta0 = VectorFile(args.theta, verbose=args.verbose).read()
    constants = EbConstants(A=args.A, C_q=args.Cq, D_q=args.Dq, q=args.q)
    report = check_eb(theta0, args.s, constants, ell_floor_rule=args.ell_floor or config.ell_floor)
    writer = ReportWriter(args.out, verbose=args.verbose)
    stdout.write(writer.write_report(report, f"{Path(args.theta).stem}.eb.yml"))
    return EXIT_OK if report.satisfied else EXIT_NOT_SATISFIED


def cmd_thresholds(args, config, stdout, start_time):
    g = density_from_args(args, config)
    rows = []
    for alpha in np.geomspace(args.alpha_min, args.alpha_max, args.points):
        triple = threshold_triple(g, float(alpha))
        rows.append(triple.to_struct())
    writer = ReportWriter(args.out, verbose=args.verbose)
    stdout.write(writer.write_csv(rows, ["alpha", "zeta", "tau", "t"], "thresholds.csv"))
    return EXIT_OK


def cmd_gtable(args, config, stdout, start_time):
    g = density_from_args(args, config)
    xs = np.arange(0.0, args.x_max + args.step / 2, args.step)
    rows = [{"x": float(x), "g": float(g.g(x)), "log_ratio": float(g.log_ratio(x)), "score": float(g.score(x))} for x in xs]
    writer = ReportWriter(args.out, verbose=args.verbose)
    stdout.write(writer.write_csv(rows, ["x", "g", "log_ratio", "score"], "gtable.csv"))
    return EXIT_OK


def cmd_signal(args, config, stdout, start_time):
    spec = {
        "kind": args.kind, "amplitude": args.amplitude, "alpha": args.alpha, "D_q": args.Dq, "q": args.q,
        "s1": args.s1, "c": args.c, "variant": args.variant, "m_n": args.m_n,
    }
    spec = {k: v for k, v in spec.items() if v is not None}
    g = density_from_args(args, config, args.n) if args.kind == "adversarial" else None
    rng = replicate_generator(args.seed, 0, 0)
    theta0 = generate_signal(spec, args.n, args.s, rng, g=g)
    writer = ReportWriter(args.out, verbose=args.verbose)
    if writer.write_vector(theta0, f"{args.name}.txt") is None:
        stdout.write("".join(format_float(v) + "\n" for v in theta0))
    writer.write_manifest(manifest_for(args, start_time), f"{args.name}.manifest.yml")
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "check-eb": cmd_check_eb,
    "thresholds": cmd_thresholds,
    "gtable": cmd_gtable,
    "signal": cmd_signal,
}


def spikeslab(args=None):
    args = parse_args(args)
    config = Config()
    stdout = sys.stdout
    start_time = time.time()

    # progress goes to stderr so reports on stdout stay machine-readable
    with contextlib.redirect_stdout(sys.stderr):
        if args.verbose:
            print(f"\n------------------------------\nRan at: {datetime.fromtimestamp(start_time)}")
        try:
            code = COMMANDS[args.command](args, config, stdout, start_time)
        except ParseError as e:
            print(f"Parse error (line {e.line_number}): {e}")
            return EXIT_INPUT_ERROR
        except (InvalidInputError, ConfigurationError, ValidationError, FileNotFoundError, yaml.YAMLError) as e:
            print(f"Input error: {e}")
            return EXIT_INPUT_ERROR
        except NumericalError as e:
            print(f"Numerical error (achieved error {e.achieved_error}): {e}")
            return EXIT_NUMERICAL_ERROR

        if args.verbose:
            print(f"Execution time: {time.time() - start_time:.2f} seconds")
    return code

