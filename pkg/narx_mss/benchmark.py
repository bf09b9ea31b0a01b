"""
Monte-Carlo structure recovery experiments on the simulated systems.
"""
import logging
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from . import config
from .dictionary import RegressorTerm, parse_term
from .exceptions import ConfigError, NumericalError
from .frols import run_frols
from .meta_mss import MetaMssConfig, RunReport, run_meta_mss
from .systems import generate, get_system

logger = logging.getLogger(__name__)

METHODS = ("meta-mss", "frols")

TermLike = Union[str, RegressorTerm]


def _canonical(term: TermLike) -> RegressorTerm:
    return parse_term(term) if isinstance(term, str) else term


def exact_match(selected: Iterable[TermLike], truth: Iterable[TermLike]) -> bool:
    """Set equality of canonical terms; parameters are not compared."""
    return {_canonical(t) for t in selected} == {_canonical(t) for t in truth}


@dataclass
class ExperimentReport:
    """Aggregate of repeated seeded runs on one system."""
    system_id: str
    method: str
    runs: int
    correct_pct: float
    mean_elapsed_ms: float
    structure_histogram: Dict[str, int]
    size_histogram: Dict[str, int]
    n_over: int
    n_under: int
    reports: List[RunReport] = field(repr=False)
    correct: List[bool] = field(repr=False)
    max_iter: Optional[int] = None
    n_agents: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        payload = {
            "system_id": self.system_id,
            "method": self.method,
            "runs": self.runs,
            "correct_pct": self.correct_pct,
            "mean_elapsed_ms": self.mean_elapsed_ms,
            "structure_histogram": self.structure_histogram,
            "size_histogram": self.size_histogram,
            "n_over": self.n_over,
            "n_under": self.n_under,
            "reports": [report.to_dict() for report in self.reports],
            "schema": config.SCHEMA_VERSION,
        }
        if self.max_iter is not None:
            payload["max_iter"] = self.max_iter
            payload["n_agents"] = self.n_agents
        return payload

    def to_rows(self) -> List[Dict[str, Any]]:
        """One flat record per run, for CSV export."""
        return [{
            "system_id": self.system_id,
            "method": self.method,
            "seed": report.seed,
            "correct": correct,
            "n_terms": report.n_terms,
            "structure": " + ".join(report.structure),
            "fitness": report.fitness,
            "rrse": report.rrse,
            "elapsed_ms": report.elapsed_ms,
        } for report, correct in zip(self.reports, self.correct)]


def _failed_report(method: str, seed: int, elapsed_ms: float) -> RunReport:
    return RunReport(method=method, structure=[], theta=[], fitness=float("inf"), rrse=None,
                     penalty=0.0, n_redundant=0, model_size=0, trace=[], elapsed_ms=elapsed_ms,
                     seed=seed, converged_at=0)


def run_single(system_id: str,
               method: str,
               seed: int,
               meta_config: MetaMssConfig,
               n_samples: int = config.N_SAMPLES,
               frols_stop: str = "ftest") -> Tuple[RunReport, bool]:
    """
    Generate one realization with ``seed`` and identify it.

    Inputs and noise are redrawn for every seed. A run that aborts
    numerically counts as incorrect.
    """
    system = get_system(system_id)
    dataset = generate(system_id, n_samples, seed)
    started = time.perf_counter()
    try:
        if method == "meta-mss":
            _, report = run_meta_mss(dataset, meta_config.with_seed(seed))
        else:
            _, report = run_frols(dataset, meta_config.dictionary, frols_stop, seed=seed,
                                  alpha=meta_config.alpha)
    except NumericalError as e:
        logger.warning("%s run with seed %d failed: %s", system_id, seed, e)
        return _failed_report(method, seed, (time.perf_counter() - started) * 1000.0), False
    return report, exact_match(report.structure, system.true_terms)


def summarize(system_id: str,
              method: str,
              outcomes: Sequence[Tuple[RunReport, bool]]) -> ExperimentReport:
    """Aggregate run outcomes into correctness, timing and histograms."""
    reports = [report for report, _ in outcomes]
    correct = [bool(ok) for _, ok in outcomes]
    true_size = len(get_system(system_id).truth)
    sizes = [report.n_terms for report in reports]
    structures = Counter(" + ".join(report.structure) for report in reports)
    size_counts = Counter(sizes)
    return ExperimentReport(
        system_id=system_id,
        method=method,
        runs=len(reports),
        correct_pct=float(np.mean(correct)) if reports else 0.0,
        mean_elapsed_ms=float(np.mean([r.elapsed_ms for r in reports])) if reports else 0.0,
        structure_histogram=dict(structures.most_common()),
        size_histogram={str(size): size_counts[size] for size in sorted(size_counts)},
        n_over=sum(size > true_size for size in sizes),
        n_under=sum(size < true_size for size in sizes),
        reports=reports,
        correct=correct,
    )


def run_experiment(system_id: str,
                   method: str = "meta-mss",
                   n_runs: int = config.N_RUNS,
                   meta_config: Optional[MetaMssConfig] = None,
                   base_seed: int = config.SEED,
                   n_jobs: int = config.N_JOBS,
                   n_samples: int = config.N_SAMPLES,
                   frols_stop: str = "ftest",
                   progress: bool = False) -> ExperimentReport:
    """
    Independent seeded runs on one system.

    Run i uses seed ``base_seed + i`` for both data generation and search, so
    each run is unaffected by the others.

    Args:
        system_id: "S1".."S6"
        method: "meta-mss" or "frols"
        n_runs: Number of runs
        meta_config: Dictionary, significance and swarm settings
        base_seed: Seed of the first run
        n_jobs: Parallel workers over runs
        n_samples: Samples per realization
        frols_stop: Stopping rule of the FROLS baseline
        progress: Show a progress bar

    Returns:
        ExperimentReport
    """
    if method not in METHODS:
        raise ConfigError(f"Unknown method '{method}', expected one of {METHODS}")
    if n_runs < 1:
        raise ConfigError("At least one run is required")
    get_system(system_id)
    meta_config = meta_config or MetaMssConfig()

    seeds = [base_seed + i for i in range(n_runs)]
    logger.info("Running %d %s runs on %s", n_runs, method, system_id)
    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(run_single)(system_id, method, seed, meta_config, n_samples, frols_stop)
        for seed in tqdm(seeds, desc=f"{system_id} {method} runs", disable=not progress))
    report = summarize(system_id, method, outcomes)
    logger.info("%s %s: %.1f%% correct, %.1f ms mean", system_id, method,
                100.0 * report.correct_pct, report.mean_elapsed_ms)
    return report


def run_sweep(system_id: str,
              method: str = "meta-mss",
              grid: Sequence[Tuple[int, int]] = tuple(config.SWEEP_GRID),
              n_runs: int = config.N_RUNS,
              meta_config: Optional[MetaMssConfig] = None,
              base_seed: int = config.SEED,
              n_jobs: int = config.N_JOBS,
              progress: bool = False) -> List[ExperimentReport]:
    """
    Sensitivity of recovery and timing to the number of iterations and agents.

    Args:
        grid: (max_iter, n_agents) pairs

    Returns:
        One ExperimentReport per grid point, in grid order
    """
    if method != "meta-mss":
        raise ConfigError("Only the swarm search has iteration and agent settings to sweep")
    meta_config = meta_config or MetaMssConfig()
    reports = []
    for max_iter, n_agents in grid:
        point = replace(meta_config, swarm=replace(meta_config.swarm, max_iter=max_iter,
                                                   n_agents=n_agents))
        report = run_experiment(system_id, method, n_runs, point, base_seed, n_jobs,
                                progress=progress)
        report.max_iter, report.n_agents = max_iter, n_agents
        reports.append(report)
    return reports
