"""
Structure selection for logistic NARX classifiers.

The probability of the positive class is p_k = sigmoid(psi_k' theta).
Parameters are estimated by stochastic gradient descent on the logistic
negative log-likelihood, regressors are pruned with a Wald test, and the
swarm minimizes (1 - r) times the complexity penalty, where r is the
point-biserial correlation between predicted probabilities and labels.
"""
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import partial
from operator import mul
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from . import config
from .bpsogsa import SwarmConfig, optimize
from .data import Dataset
from .dictionary import (Dictionary, DictionaryConfig, RegressorTerm, build_dictionary,
                         build_regression_matrix, check_compatible, target)
from .estimation import SignificanceReport, standard_errors, t_test
from .exceptions import (ConfigError, DegenerateClasses, EmptyModel, InvalidLabels,
                         NumericalError, SearchAborted, SingularModel)
from .meta_mss import RunReport, penalty

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SgdConfig:
    """Stochastic gradient descent settings."""
    learning_rate: float = config.LEARNING_RATE
    epochs: int = config.EPOCHS
    batch_size: int = config.BATCH_SIZE
    tolerance: float = config.SGD_TOLERANCE
    seed: int = config.SEED

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("The learning rate must be positive")
        if self.epochs < 1:
            raise ConfigError("At least one epoch is required")
        if self.batch_size < 1:
            raise ConfigError("The batch size must be at least 1")


def _input_only_dictionary() -> DictionaryConfig:
    return DictionaryConfig(autoregressive=False)


@dataclass(frozen=True)
class ClassifierConfig:
    """Settings of a classifier structure selection run."""
    dictionary: DictionaryConfig = field(default_factory=_input_only_dictionary)
    alpha: float = config.ALPHA
    swarm: SwarmConfig = field(default_factory=SwarmConfig)
    sgd: SgdConfig = field(default_factory=SgdConfig)
    split: float = config.TRAIN_SPLIT

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.split < 1.0:
            raise ConfigError(f"split must lie in (0, 1), got {self.split}")

    def with_seed(self, seed: int) -> "ClassifierConfig":
        return replace(self, swarm=replace(self.swarm, seed=seed), sgd=replace(self.sgd, seed=seed))


@dataclass
class ClassifierModel:
    """A classifier structure with its parameters and training diagnostics."""
    mask: np.ndarray
    theta: np.ndarray
    fitness: float = float("inf")
    penalty: float = float("nan")
    biserial: float = float("nan")
    accuracy: float = float("nan")
    n_redundant: int = 0
    model_size: int = 0
    n_insignificant: int = 0

    @property
    def n_terms(self) -> int:
        return int(np.sum(self.mask))

    def terms(self, dictionary: Dictionary) -> List[RegressorTerm]:
        return dictionary.selected(self.mask)

    def predict_proba(self, dataset: Dataset, dictionary: Dictionary) -> np.ndarray:
        return predict_probability(build_regression_matrix(dataset, dictionary, self.mask), self.theta)


def check_labels(y: np.ndarray) -> None:
    labels = np.unique(y)
    if not np.all(np.isin(labels, (0.0, 1.0))):
        raise InvalidLabels(f"Labels must be 0 or 1, found {labels[:10].tolist()}")


def predict_probability(psi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """sigmoid(psi theta), for a single regressor row or a whole matrix."""
    return expit(np.asarray(psi, dtype=float) @ np.asarray(theta, dtype=float))


def negative_log_likelihood(psi: np.ndarray, y: np.ndarray, theta: np.ndarray,
                            clip: float = config.PROBABILITY_CLIP) -> float:
    """Mean logistic negative log-likelihood."""
    p = np.clip(predict_probability(psi, theta), clip, 1.0 - clip)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def nll_gradient(psi: np.ndarray, y: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Gradient of the mean negative log-likelihood."""
    return -(y - predict_probability(psi, theta)) @ psi / len(y)


def _per_sample_epoch(rows: List[List[float]],
                      labels: List[float],
                      theta: List[float],
                      order: Sequence[int],
                      learning_rate: float) -> List[float]:
    for k in order:
        row = rows[k]
        z = sum(map(mul, row, theta))
        if z >= 0.0:
            p = 1.0 / (1.0 + math.exp(-z))
        else:
            ez = math.exp(z)
            p = ez / (1.0 + ez)
        step = learning_rate * (labels[k] - p)
        theta = [t + step * v for t, v in zip(theta, row)]
    return theta


def sgd_fit(psi: np.ndarray, y: np.ndarray, sgd_config: Optional[SgdConfig] = None) -> np.ndarray:
    """
    Fit logistic parameters by (mini-batch) stochastic gradient descent.

    Each update is theta += lr * mean((y - p) psi) over the batch, so a batch
    of one is the plain per-sample rule. Sample order is reshuffled every
    epoch. Training stops early once an epoch improves the NLL by less than
    the tolerance.

    Args:
        psi: Regression matrix
        y: Labels in {0, 1}
        sgd_config: Step size, epochs, batch size, tolerance and seed

    Returns:
        Parameter vector
    """
    sgd_config = sgd_config or SgdConfig()
    psi = np.asarray(psi, dtype=float)
    y = np.asarray(y, dtype=float)
    check_labels(y)
    n, m = psi.shape
    per_sample = sgd_config.batch_size == 1
    if per_sample:
        rows, labels = psi.tolist(), y.tolist()

    rng = np.random.default_rng(sgd_config.seed)
    theta = np.zeros(m)
    previous = negative_log_likelihood(psi, y, theta)
    for epoch in range(sgd_config.epochs):
        order = rng.permutation(n)
        if per_sample:
            theta = np.array(_per_sample_epoch(rows, labels, theta.tolist(), order.tolist(),
                                               sgd_config.learning_rate))
        else:
            for start in range(0, n, sgd_config.batch_size):
                batch = order[start:start + sgd_config.batch_size]
                error = y[batch] - predict_probability(psi[batch], theta)
                theta += sgd_config.learning_rate * (error @ psi[batch]) / len(batch)
        current = negative_log_likelihood(psi, y, theta)
        if previous - current < sgd_config.tolerance:
            logger.debug("SGD stopped after %d epochs (NLL %.6g)", epoch + 1, current)
            break
        previous = current
    return theta


def wald_test(psi: np.ndarray, theta: np.ndarray, alpha: float) -> SignificanceReport:
    """
    Significance of logistic parameters.

    Standard errors come from the diagonal of the inverse observed
    information psi' W psi, W = diag(p (1 - p)).
    """
    n, m = psi.shape
    if n <= m:
        raise SingularModel(f"{n} samples cannot test {m} parameters")
    p = predict_probability(psi, theta)
    weights = np.sqrt(p * (1.0 - p))
    se = standard_errors(weights[:, None] * psi, 1.0)
    return t_test(theta, se, alpha, n - m)


def biserial_correlation(x: np.ndarray, y: np.ndarray) -> float:
    """
    Point-biserial correlation between a continuous series and binary labels.

    r = (mean_1 - mean_0) / std(x) * sqrt(n_1 n_0 / N^2), with the population
    standard deviation. A constant ``x`` gives r = 0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"Length mismatch: {x.shape} vs {y.shape}")
    check_labels(y)
    positive = y == 1
    n1 = int(positive.sum())
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        raise DegenerateClasses("Both classes must be present")
    sigma = x.std()
    if sigma == 0:
        return 0.0
    r = (x[positive].mean() - x[~positive].mean()) / sigma * np.sqrt(n1 * n0 / y.size ** 2)
    return float(np.clip(r, -1.0, 1.0))


def accuracy(p_hat: np.ndarray, y: np.ndarray, threshold: float = 0.5) -> float:
    """Share of samples whose thresholded probability equals the label."""
    p_hat = np.asarray(p_hat, dtype=float)
    y = np.asarray(y, dtype=float)
    if p_hat.shape != y.shape:
        raise ValueError(f"Length mismatch: {p_hat.shape} vs {y.shape}")
    return float(np.mean((p_hat >= threshold) == (y == 1)))


def classifier_fitness(p_hat: np.ndarray, y: np.ndarray, penalty_value: float) -> Tuple[float, float]:
    """(1 - r) * penalty, returned with r."""
    r = biserial_correlation(p_hat, y)
    return (1.0 - r) * penalty_value, r


def evaluate_classifier_candidate(mask: np.ndarray,
                                  dictionary: Dictionary,
                                  dataset: Dataset,
                                  alpha: float = config.ALPHA,
                                  n_dimensions: Optional[int] = None,
                                  sgd_config: Optional[SgdConfig] = None) -> ClassifierModel:
    """
    Fit, prune, refit and score one classifier structure on measured data.

    Args:
        mask: Binary inclusion vector over the dictionary
        dictionary: Candidate terms
        dataset: Training data with {0, 1} output
        alpha: Significance level of the Wald test
        n_dimensions: noV used by the penalty (defaults to the dictionary size)
        sgd_config: Estimation settings

    Returns:
        The pruned classifier with fitness, penalty and biserial r set
    """
    n_dimensions = len(dictionary) if n_dimensions is None else n_dimensions
    mask = np.asarray(mask, dtype=bool)
    psi = build_regression_matrix(dataset, dictionary, mask)
    y = target(dataset, dictionary)
    try:
        theta = sgd_fit(psi, y, sgd_config)
        keep = wald_test(psi, theta, alpha).reject_null
    except NumericalError as e:
        logger.debug("Infeasible classifier with %d terms: %s", int(mask.sum()), e)
        return ClassifierModel(mask=mask, theta=np.full(int(mask.sum()), np.nan))
    if not keep.any():
        raise EmptyModel("No regressor is significant")

    n_redundant = int((~keep).sum())
    pruned = mask.copy()
    if n_redundant:
        pruned[np.flatnonzero(mask)[~keep]] = False
        psi = psi[:, keep]
        theta = sgd_fit(psi, y, sgd_config)

    p_hat = predict_probability(psi, theta)
    model_size = int(mask.sum()) + n_redundant
    penalty_value = penalty(n_dimensions, model_size)
    fitness, r = classifier_fitness(p_hat, y, penalty_value)
    return ClassifierModel(mask=pruned, theta=theta, fitness=fitness, penalty=penalty_value,
                           biserial=r, accuracy=accuracy(p_hat, y),
                           n_redundant=n_redundant, model_size=model_size)


def classifier_swarm_fitness(mask: np.ndarray,
                             dictionary: Dictionary,
                             dataset: Dataset,
                             alpha: float,
                             n_dimensions: int,
                             sgd_config: SgdConfig) -> Tuple[float, np.ndarray]:
    candidate = evaluate_classifier_candidate(mask, dictionary, dataset, alpha, n_dimensions, sgd_config)
    return candidate.fitness, candidate.mask


def run_meta_mss_classifier(dataset: Dataset,
                            classifier_config: Optional[ClassifierConfig] = None
                            ) -> Tuple[ClassifierModel, RunReport]:
    """
    Select a logistic NARX structure and score it on a held-out split.

    The data are split in time order; the search and the final fit use the
    leading part and the reported accuracy comes from the trailing part.

    Args:
        dataset: Inputs and {0, 1} labels
        classifier_config: Dictionary, significance, swarm, SGD and split settings

    Returns:
        (final classifier, run report with test accuracy)
    """
    classifier_config = classifier_config or ClassifierConfig()
    started = time.perf_counter()
    check_labels(dataset.output)

    dictionary = build_dictionary(classifier_config.dictionary)
    train, test = dataset.split(classifier_config.split)
    check_compatible(train, dictionary)
    check_compatible(test, dictionary)
    if np.unique(target(train, dictionary)).size < 2:
        raise DegenerateClasses("The training labels contain a single class")

    evaluate = partial(classifier_swarm_fitness, dictionary=dictionary, dataset=train,
                       alpha=classifier_config.alpha, n_dimensions=len(dictionary),
                       sgd_config=classifier_config.sgd)
    state = optimize(len(dictionary), evaluate, classifier_config.swarm)
    if not np.isfinite(state.gbest_fitness):
        raise SearchAborted("No agent produced a feasible classifier")

    try:
        best = evaluate_classifier_candidate(state.gbest_position, dictionary, train,
                                             classifier_config.alpha, len(dictionary),
                                             classifier_config.sgd)
    except EmptyModel:
        logger.warning("Best encoding prunes to nothing; keeping its unpruned fit")
        y_train = target(train, dictionary)
        psi = build_regression_matrix(train, dictionary, state.gbest_position)
        theta = sgd_fit(psi, y_train, classifier_config.sgd)
        p_hat = predict_probability(psi, theta)
        model_size = int(state.gbest_position.sum())
        penalty_value = penalty(len(dictionary), model_size)
        fitness, r = classifier_fitness(p_hat, y_train, penalty_value)
        best = ClassifierModel(mask=state.gbest_position.copy(), theta=theta, fitness=fitness,
                               penalty=penalty_value, biserial=r, accuracy=accuracy(p_hat, y_train),
                               model_size=model_size, n_insignificant=model_size)
    if not np.isfinite(best.fitness):
        raise SearchAborted("The best encoding cannot be estimated")

    test_accuracy = accuracy(best.predict_proba(test, dictionary), target(test, dictionary))
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    report = RunReport(
        method="meta-mss-classifier",
        structure=[str(term) for term in best.terms(dictionary)],
        theta=[float(v) for v in best.theta],
        fitness=float(best.fitness),
        rrse=None,
        penalty=float(best.penalty),
        n_redundant=best.n_redundant,
        model_size=best.model_size,
        trace=[float(v) for v in state.trace],
        elapsed_ms=elapsed_ms,
        seed=classifier_config.swarm.seed,
        converged_at=state.converged_at,
        n_insignificant=best.n_insignificant,
        accuracy=test_accuracy,
        biserial=float(best.biserial),
    )
    logger.info("Selected %d classifier terms, test accuracy %.4f", best.n_terms, test_accuracy)
    return best, report


def vote_structure(reports: Sequence[RunReport]) -> Tuple[List[str], int]:
    """
    Most frequent structure over repeated runs.

    Ties go to the structure seen first.

    Returns:
        (structure, number of runs that selected it)
    """
    if not reports:
        raise ValueError("No reports to vote over")
    votes = Counter(tuple(report.structure) for report in reports)
    structure, count = votes.most_common(1)[0]
    return list(structure), count
