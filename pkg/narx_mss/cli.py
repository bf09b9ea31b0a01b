"""
Command-line interface for NARX structure selection.

Exit codes: 0 success, 2 usage or I/O error, 3 data error, 4 numerical abort.
"""
import argparse
import logging
import os
import sys
from argparse import Namespace
from typing import List, Optional

from . import config
from .benchmark import METHODS, ExperimentReport, run_experiment, run_sweep
from .bpsogsa import INERTIA_SCHEDULES, SwarmConfig
from .classification import ClassifierConfig, SgdConfig, run_meta_mss_classifier
from .data import load_csv, save_csv
from .dictionary import DictionaryConfig
from .exceptions import ConfigError, DataError, NumericalError
from .frols import STOPPING_RULES, run_frols
from .meta_mss import MetaMssConfig, RunReport, run_meta_mss
from .systems import CLASSIFICATION_SYSTEMS, SYSTEMS, generate
from .utils import display_model_summary, save_report_json, save_runs_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _add_dictionary_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ny", type=int, default=config.NY,
                        help=f"Maximum output lag (default: {config.NY})")
    parser.add_argument("--nx", type=int, nargs="+", default=[config.NX],
                        help=f"Maximum input lag, one value per channel or one for all (default: {config.NX})")
    parser.add_argument("--degree", type=int, default=config.DEGREE,
                        help=f"Nonlinearity degree (default: {config.DEGREE})")
    parser.add_argument("--delay", type=int, default=config.DELAY,
                        help=f"Input delay (default: {config.DELAY})")


def _add_search_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=config.ALPHA,
                        help=f"Significance level of the regressor test (default: {config.ALPHA})")
    parser.add_argument("--max-iter", type=int, default=config.MAX_ITER,
                        help=f"Swarm iterations (default: {config.MAX_ITER})")
    parser.add_argument("--agents", type=int, default=config.N_AGENTS,
                        help=f"Number of search agents (default: {config.N_AGENTS})")
    parser.add_argument("--g0", type=float, default=config.G0,
                        help=f"Initial gravitational constant (default: {config.G0})")
    parser.add_argument("--gsa-alpha", type=float, default=config.GSA_ALPHA,
                        help=f"Decay rate of the gravitational constant (default: {config.GSA_ALPHA})")
    parser.add_argument("--inertia-schedule", choices=INERTIA_SCHEDULES, default=config.INERTIA_SCHEDULE,
                        help=f"Inertia factor schedule (default: {config.INERTIA_SCHEDULE})")


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=config.SEED,
                        help=f"Master random seed (default: {config.SEED})")
    parser.add_argument("--jobs", type=int, default=config.N_JOBS,
                        help=f"Parallel workers (default: {config.N_JOBS})")
    parser.add_argument("--out", type=str, default=None,
                        help=f"Output file path (default: under {config.OUTPUT_DIR}/)")
    parser.add_argument("--verbose", action="store_true", help="Log debug messages")
    parser.add_argument("--progress", action="store_true", help="Show progress bars")
    parser.add_argument("--no-timing", action="store_true",
                        help="Write zero elapsed times so reports are reproducible byte for byte")


def parse_arguments(args: Optional[List[str]] = None) -> Namespace:
    """
    Parse command line arguments.

    Args:
        args: Command line arguments (None to use sys.argv)

    Returns:
        Parsed arguments namespace
    """
    parser = argparse.ArgumentParser(prog="narx-mss",
                                     description="Structure selection for polynomial NARX models")
    subparsers = parser.add_subparsers(dest="command", required=True)

    identify = subparsers.add_parser("identify", help="Identify a regression model from a CSV file")
    identify.add_argument("csv", type=str, help="CSV file with columns u1,...,ur,y")
    identify.add_argument("--method", choices=METHODS, default="meta-mss",
                          help="Structure selection method (default: meta-mss)")
    identify.add_argument("--standardize", action="store_true",
                          help="Center and scale the input columns")
    identify.add_argument("--frols-stop", choices=STOPPING_RULES, default="ftest",
                          help="FROLS stopping rule (default: ftest)")
    identify.add_argument("--frols-terms", type=int, default=None,
                          help="FROLS term budget for the fixed rule")
    _add_dictionary_arguments(identify)
    _add_search_arguments(identify)
    _add_common_arguments(identify)
    identify.set_defaults(handler=cmd_identify)

    classify = subparsers.add_parser("classify", help="Identify a logistic NARX classifier from a CSV file")
    classify.add_argument("csv", type=str, help="CSV file with columns u1,...,ur,y and y in {0, 1}")
    classify.add_argument("--split", type=float, default=config.TRAIN_SPLIT,
                          help=f"Training fraction, taken in time order (default: {config.TRAIN_SPLIT})")
    classify.add_argument("--standardize", action="store_true", dest="standardize", default=True,
                          help="Center and scale the input columns (default)")
    classify.add_argument("--no-standardize", action="store_false", dest="standardize",
                          help="Keep the input columns unscaled")
    classify.add_argument("--autoregressive", action="store_true",
                          help="Include lagged labels as candidate regressors")
    classify.add_argument("--learning-rate", type=float, default=config.LEARNING_RATE,
                          help=f"SGD step size (default: {config.LEARNING_RATE})")
    classify.add_argument("--epochs", type=int, default=config.EPOCHS,
                          help=f"Maximum SGD epochs (default: {config.EPOCHS})")
    classify.add_argument("--batch-size", type=int, default=config.BATCH_SIZE,
                          help=f"SGD batch size (default: {config.BATCH_SIZE})")
    _add_dictionary_arguments(classify)
    _add_search_arguments(classify)
    _add_common_arguments(classify)
    classify.set_defaults(handler=cmd_classify)

    benchmark = subparsers.add_parser("benchmark", help="Monte-Carlo recovery runs on a simulated system")
    benchmark.add_argument("system", choices=sorted(SYSTEMS), help="Simulated system")
    benchmark.add_argument("method", nargs="?", choices=METHODS, default="meta-mss",
                           help="Structure selection method (default: meta-mss)")
    benchmark.add_argument("--runs", type=int, default=config.N_RUNS,
                           help=f"Number of seeded runs (default: {config.N_RUNS})")
    benchmark.add_argument("--full", action="store_true",
                           help=f"Use {config.N_RUNS_FULL} runs")
    benchmark.add_argument("--samples", type=int, default=config.N_SAMPLES,
                           help=f"Samples per realization (default: {config.N_SAMPLES})")
    _add_dictionary_arguments(benchmark)
    _add_search_arguments(benchmark)
    _add_common_arguments(benchmark)
    benchmark.set_defaults(handler=cmd_benchmark)

    sweep = subparsers.add_parser("sweep", help="Sensitivity of recovery to iterations and agents")
    sweep.add_argument("system", choices=sorted(SYSTEMS), help="Simulated system")
    sweep.add_argument("--runs", type=int, default=config.N_RUNS,
                       help=f"Number of seeded runs per grid point (default: {config.N_RUNS})")
    _add_dictionary_arguments(sweep)
    _add_search_arguments(sweep)
    _add_common_arguments(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    gen = subparsers.add_parser("generate", help="Write one realization of a simulated system to CSV")
    gen.add_argument("system", choices=sorted(SYSTEMS) + list(CLASSIFICATION_SYSTEMS),
                     help="Simulated system")
    gen.add_argument("--samples", type=int, default=config.N_SAMPLES,
                     help=f"Number of samples (default: {config.N_SAMPLES})")
    gen.add_argument("--seed", type=int, default=config.SEED,
                     help=f"Random seed (default: {config.SEED})")
    gen.add_argument("--out", type=str, default=None,
                     help=f"Output CSV path (default: {config.OUTPUT_DIR}/<system>.csv)")
    gen.add_argument("--verbose", action="store_true", help="Log debug messages")
    gen.set_defaults(handler=cmd_generate)

    return parser.parse_args(args)


def _dictionary_config(args: Namespace, n_inputs: int, autoregressive: bool = True) -> DictionaryConfig:
    n_x = args.nx * n_inputs if len(args.nx) == 1 else args.nx
    if len(n_x) != n_inputs:
        raise ConfigError(f"--nx has {len(n_x)} values for {n_inputs} input channels")
    return DictionaryConfig(n_y=args.ny, n_x=tuple(n_x), degree=args.degree, delay=args.delay,
                            autoregressive=autoregressive)


def _swarm_config(args: Namespace, n_jobs: Optional[int] = None) -> SwarmConfig:
    return SwarmConfig(n_agents=args.agents, max_iter=args.max_iter, g0=args.g0, alpha=args.gsa_alpha,
                       inertia_schedule=args.inertia_schedule, seed=args.seed,
                       n_jobs=args.jobs if n_jobs is None else n_jobs, progress=args.progress)


def _output_path(args: Namespace, name: str) -> str:
    return args.out or os.path.join(config.OUTPUT_DIR, name)


def _strip_timing(report: RunReport) -> RunReport:
    report.elapsed_ms = 0.0
    return report


def cmd_identify(args: Namespace) -> int:
    """Identify a regression model and save its report."""
    dataset = load_csv(args.csv, standardize=args.standardize)
    dict_config = _dictionary_config(args, dataset.n_inputs)
    print(f"Identifying a model from {args.csv} ({dataset.n_samples} samples, "
          f"{dataset.n_inputs} inputs) with {args.method}...")

    if args.method == "frols":
        _, report = run_frols(dataset, dict_config, args.frols_stop, args.frols_terms, seed=args.seed,
                              alpha=args.alpha)
    else:
        meta_config = MetaMssConfig(dictionary=dict_config, alpha=args.alpha, swarm=_swarm_config(args))
        _, report = run_meta_mss(dataset, meta_config)
    if args.no_timing:
        _strip_timing(report)

    display_model_summary(report)
    save_report_json(_output_path(args, "identify.json"), report.to_dict())
    return EXIT_OK


def cmd_classify(args: Namespace) -> int:
    """Identify a logistic NARX classifier and save its report."""
    dataset = load_csv(args.csv, standardize=args.standardize)
    dict_config = _dictionary_config(args, dataset.n_inputs, autoregressive=args.autoregressive)
    classifier_config = ClassifierConfig(
        dictionary=dict_config,
        alpha=args.alpha,
        swarm=_swarm_config(args),
        sgd=SgdConfig(learning_rate=args.learning_rate, epochs=args.epochs,
                      batch_size=args.batch_size, seed=args.seed),
        split=args.split,
    )
    print(f"Identifying a classifier from {args.csv} ({dataset.n_samples} samples, "
          f"{dataset.n_inputs} inputs, {args.split:.0%} for training)...")

    _, report = run_meta_mss_classifier(dataset, classifier_config)
    if args.no_timing:
        _strip_timing(report)

    display_model_summary(report)
    save_report_json(_output_path(args, "classify.json"), report.to_dict())
    return EXIT_OK


def _save_experiment(report: ExperimentReport, json_path: str, no_timing: bool) -> None:
    if no_timing:
        report.mean_elapsed_ms = 0.0
        for run in report.reports:
            _strip_timing(run)
    save_report_json(json_path, report.to_dict())
    save_runs_csv(os.path.splitext(json_path)[0] + ".csv", report.to_rows())


def _benchmark_config(args: Namespace) -> MetaMssConfig:
    # runs are the unit of parallelism; each search evaluates sequentially
    return MetaMssConfig(dictionary=_dictionary_config(args, 1), alpha=args.alpha,
                         swarm=_swarm_config(args, n_jobs=1))


def cmd_benchmark(args: Namespace) -> int:
    """Run seeded recovery experiments and save JSON and CSV reports."""
    n_runs = config.N_RUNS_FULL if args.full else args.runs
    print(f"Running {n_runs} {args.method} runs on {args.system}...")
    report = run_experiment(args.system, args.method, n_runs, _benchmark_config(args),
                            base_seed=args.seed, n_jobs=args.jobs, n_samples=args.samples,
                            progress=args.progress)

    print(f"Correct structures: {report.correct_pct:.1%} of {report.runs} runs")
    print(f"Over-/under-parameterized: {report.n_over}/{report.n_under}")
    if not args.no_timing:
        print(f"Mean elapsed time: {report.mean_elapsed_ms:.1f} ms")
    for structure, count in list(report.structure_histogram.items())[:5]:
        print(f"  {count:4d}  {structure or '(empty)'}")

    _save_experiment(report, _output_path(args, f"benchmark_{args.system}_{args.method}.json"),
                     args.no_timing)
    return EXIT_OK


def cmd_sweep(args: Namespace) -> int:
    """Run the iteration/agent sensitivity grid."""
    print(f"Sweeping {len(config.SWEEP_GRID)} settings with {args.runs} runs each on {args.system}...")
    reports = run_sweep(args.system, "meta-mss", config.SWEEP_GRID, args.runs, _benchmark_config(args),
                        base_seed=args.seed, n_jobs=args.jobs, progress=args.progress)
    for report in reports:
        timing = "" if args.no_timing else f", {report.mean_elapsed_ms:.1f} ms"
        print(f"  max_iter={report.max_iter:3d} agents={report.n_agents:3d}: "
              f"{report.correct_pct:.1%} correct{timing}")

    rows = []
    payload = {"system_id": args.system, "grid": []}
    json_path = _output_path(args, f"sweep_{args.system}.json")
    for report in reports:
        if args.no_timing:
            report.mean_elapsed_ms = 0.0
            for run in report.reports:
                _strip_timing(run)
        payload["grid"].append(report.to_dict())
        rows.extend(dict(row, max_iter=report.max_iter, n_agents=report.n_agents)
                    for row in report.to_rows())
    save_report_json(json_path, payload)
    save_runs_csv(os.path.splitext(json_path)[0] + ".csv", rows)
    return EXIT_OK


def cmd_generate(args: Namespace) -> int:
    """Write one realization of a simulated system."""
    dataset = generate(args.system, args.samples, args.seed)
    output_path = _output_path(args, f"{args.system}.csv")
    save_csv(dataset, output_path)
    print(f"Wrote {dataset.n_samples} samples of {args.system} to {output_path}")
    return EXIT_OK


def run(args: Namespace) -> int:
    """
    Dispatch a parsed command and map failures to exit codes.

    Args:
        args: Parsed arguments

    Returns:
        Process exit code
    """
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    try:
        args = parse_arguments(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
