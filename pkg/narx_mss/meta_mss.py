"""
Meta-structure selection for regression NARX models.

Each agent of the binary swarm encodes a subset of the dictionary. A
candidate is fitted by least squares, pruned of insignificant regressors,
re-estimated and simulated in free run; its fitness is the free-run RRSE
times a complexity penalty built from the derivative of a SiLU curve.
"""
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from . import config
from .bpsogsa import SwarmConfig, optimize
from .data import Dataset
from .dictionary import Dictionary, DictionaryConfig, build_dictionary, check_compatible, target
from .estimation import (CandidateModel, estimate, free_run_simulation, one_step_ahead,
                         prune_insignificant, refine_to_fixpoint, rms_error, rrse)
from .exceptions import ConfigError, DegenerateTarget, EmptyModel, NumericalError, SearchAborted

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetaMssConfig:
    """Dictionary, significance level and swarm settings of one run."""
    dictionary: DictionaryConfig = field(default_factory=DictionaryConfig)
    alpha: float = config.ALPHA
    swarm: SwarmConfig = field(default_factory=SwarmConfig)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")

    def with_seed(self, seed: int) -> "MetaMssConfig":
        return replace(self, swarm=replace(self.swarm, seed=seed))


@dataclass
class RunReport:
    """Outcome of one structure selection run."""
    method: str
    structure: List[str]
    theta: List[float]
    fitness: float
    rrse: Optional[float]
    penalty: float
    n_redundant: int
    model_size: int
    trace: List[float]
    elapsed_ms: float
    seed: int
    converged_at: int
    n_insignificant: int = 0
    one_step_rrse: Optional[float] = None
    rms_error: Optional[float] = None
    accuracy: Optional[float] = None
    biserial: Optional[float] = None
    err: Optional[List[float]] = None
    schema: int = config.SCHEMA_VERSION

    @property
    def n_terms(self) -> int:
        return len(self.structure)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready mapping; unset optional metrics are left out."""
        payload = {k: v for k, v in asdict(self).items() if v is not None}
        payload["n_terms"] = self.n_terms
        return payload


def silu_derivative(x, a: float, c: float):
    """
    s(x) * (1 + a (x - c) (1 - s(x))) with s(x) = sigmoid(a (x - c)).

    The chain-rule factor ``a`` of the true derivative is not applied.
    """
    u = a * (np.asarray(x, dtype=float) - c)
    s = expit(u)
    return s * (1.0 + u * (1.0 - s))


# Stationary points of the curve in u are +-u* with u* tanh(u* / 2) = 2.
SILU_DERIVATIVE_PEAK = float(brentq(lambda u: u * np.tanh(u / 2.0) - 2.0, 1.0, 4.0))
SILU_DERIVATIVE_MIN = float(silu_derivative(-SILU_DERIVATIVE_PEAK, 1.0, 0.0))


def penalty(n_dimensions: int, model_size: int) -> float:
    """
    Complexity penalty of a model with ``model_size`` regressors.

    One curve serves the whole dictionary: c = noV / 2 and the slope is the
    per-regressor value a = 1 / c, so the argument a (x - c) spans (-1, 1]
    over x = 1..noV and stays on the rising branch of the curve. The value
    at x = model_size is shifted by the global minimum of the curve, which
    keeps every size strictly positive. Sizes past the peak of the curve
    (possible once rejected regressors are added) are read at the peak.

    Args:
        n_dimensions: Dictionary size (noV)
        model_size: Regressors of the candidate plus regressors rejected by the t-test

    Returns:
        Positive penalty, non-decreasing in model_size
    """
    if model_size < 1:
        raise EmptyModel("A model without regressors has no penalty value")
    if n_dimensions < 1:
        raise ConfigError("The dictionary must hold at least one term")
    c = n_dimensions / 2.0
    u = min((model_size - c) / c, SILU_DERIVATIVE_PEAK)
    return float(silu_derivative(u, 1.0, 0.0) - SILU_DERIVATIVE_MIN)


def _score(model: CandidateModel,
           dictionary: Dictionary,
           dataset: Dataset,
           n_dimensions: int,
           model_size: int) -> CandidateModel:
    y_hat = free_run_simulation(model, dictionary, dataset)
    model.rrse = rrse(target(dataset, dictionary), y_hat)
    model.model_size = model_size
    model.penalty = penalty(n_dimensions, model_size)
    model.fitness = model.rrse * model.penalty
    return model


def _infeasible(mask: np.ndarray) -> CandidateModel:
    mask = np.asarray(mask, dtype=bool)
    return CandidateModel(mask=mask, theta=np.full(int(mask.sum()), np.nan))


def evaluate_candidate(mask: np.ndarray,
                       dictionary: Dictionary,
                       dataset: Dataset,
                       alpha: float = config.ALPHA,
                       n_dimensions: Optional[int] = None) -> CandidateModel:
    """
    Fit, prune, re-estimate and score one candidate structure.

    Rank-deficient or divergent candidates come back with infinite fitness.

    Args:
        mask: Binary inclusion vector over the dictionary
        dictionary: Candidate terms
        dataset: Measured data
        alpha: Significance level of the t-test
        n_dimensions: noV used by the penalty (defaults to the dictionary size)

    Returns:
        The pruned candidate with rrse, penalty, fitness and n_redundant set
    """
    n_dimensions = len(dictionary) if n_dimensions is None else n_dimensions
    try:
        fitted = estimate(mask, dictionary, dataset)
        pruned, n_redundant = prune_insignificant(fitted, dictionary, dataset, alpha)
        return _score(pruned, dictionary, dataset, n_dimensions, fitted.n_terms + n_redundant)
    except NumericalError as e:
        logger.debug("Infeasible candidate with %d terms: %s", int(np.sum(mask)), e)
        return _infeasible(mask)


def swarm_fitness(mask: np.ndarray,
                  dictionary: Dictionary,
                  dataset: Dataset,
                  alpha: float,
                  n_dimensions: int) -> Tuple[float, np.ndarray]:
    """Swarm callback: fitness of the candidate and its pruned encoding."""
    candidate = evaluate_candidate(mask, dictionary, dataset, alpha, n_dimensions)
    return candidate.fitness, candidate.mask


def decode_best(mask: np.ndarray,
                dictionary: Dictionary,
                dataset: Dataset,
                alpha: float = config.ALPHA) -> CandidateModel:
    """
    Turn the best encoding of a search into the final model.

    The encoding is evaluated once more and then pruned until every remaining
    regressor is significant on its own fit.
    """
    n_dimensions = len(dictionary)
    try:
        candidate = evaluate_candidate(mask, dictionary, dataset, alpha, n_dimensions)
    except EmptyModel:
        logger.warning("Best encoding prunes to nothing; keeping its unpruned fit")
        candidate = _score(estimate(mask, dictionary, dataset), dictionary, dataset,
                           n_dimensions, int(np.sum(mask)))
        candidate.extras["n_insignificant"] = candidate.n_terms
    if not np.isfinite(candidate.fitness):
        raise SearchAborted("The best encoding cannot be estimated or simulated")

    refined, removed = refine_to_fixpoint(candidate, dictionary, dataset, alpha)
    if removed == 0:
        return candidate
    n_redundant = candidate.n_redundant + removed
    try:
        refined = _score(refined, dictionary, dataset, n_dimensions, int(np.sum(mask)) + n_redundant)
    except NumericalError as e:
        logger.warning("Refined model cannot be simulated (%s); keeping the unrefined one", e)
        candidate.extras["n_insignificant"] = removed
        return candidate
    refined.n_redundant = n_redundant
    return refined


def build_report(model: CandidateModel,
                 dictionary: Dictionary,
                 dataset: Dataset,
                 method: str,
                 trace: List[float],
                 elapsed_ms: float,
                 seed: int,
                 converged_at: int) -> RunReport:
    """Collect the structure, parameters and fit metrics of a final model."""
    y = target(dataset, dictionary)
    y_free = free_run_simulation(model, dictionary, dataset)
    return RunReport(
        method=method,
        structure=[str(term) for term in model.terms(dictionary)],
        theta=[float(v) for v in model.theta],
        fitness=float(model.fitness),
        rrse=float(model.rrse),
        penalty=float(model.penalty),
        n_redundant=int(model.n_redundant),
        model_size=int(model.model_size),
        trace=[float(v) for v in trace],
        elapsed_ms=elapsed_ms,
        seed=seed,
        converged_at=converged_at,
        n_insignificant=int(model.extras.get("n_insignificant", 0)),
        one_step_rrse=rrse(y, one_step_ahead(model, dictionary, dataset)),
        rms_error=rms_error(y, y_free),
    )


def run_meta_mss(dataset: Dataset,
                 meta_config: Optional[MetaMssConfig] = None) -> Tuple[CandidateModel, RunReport]:
    """
    Select the structure of a regression NARX model.

    Args:
        dataset: Measured inputs and output
        meta_config: Dictionary, significance and swarm settings

    Returns:
        (final model, run report)
    """
    meta_config = meta_config or MetaMssConfig()
    started = time.perf_counter()

    dictionary = build_dictionary(meta_config.dictionary)
    check_compatible(dataset, dictionary)
    y = target(dataset, dictionary)
    if np.all(y == y[0]):
        raise DegenerateTarget("The output is constant over the evaluation window")

    logger.info("Searching %d candidate terms with %d agents for %d iterations",
                len(dictionary), meta_config.swarm.n_agents, meta_config.swarm.max_iter)
    evaluate = partial(swarm_fitness, dictionary=dictionary, dataset=dataset,
                       alpha=meta_config.alpha, n_dimensions=len(dictionary))
    state = optimize(len(dictionary), evaluate, meta_config.swarm)
    if not np.isfinite(state.gbest_fitness):
        raise SearchAborted("No agent produced a feasible candidate")

    best = decode_best(state.gbest_position, dictionary, dataset, meta_config.alpha)
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    report = build_report(best, dictionary, dataset, "meta-mss", state.trace, elapsed_ms,
                          meta_config.swarm.seed, state.converged_at)
    logger.info("Selected %d terms (fitness %.6g) in %.1f ms",
                best.n_terms, best.fitness, elapsed_ms)
    return best, report
