"""
Forward-regression orthogonal least squares (FROLS) with the error
reduction ratio, used as the classical structure selection baseline.
"""
import logging
import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import config
from .data import Dataset
from .dictionary import (Dictionary, DictionaryConfig, RegressorTerm, build_dictionary,
                         build_regression_matrix, check_compatible, target)
from .estimation import (CandidateModel, free_run_simulation, least_squares, one_step_ahead,
                         rms_error, rrse, t_critical)
from .exceptions import ConfigError, DegenerateTarget, Diverged, SearchAborted
from .meta_mss import RunReport

logger = logging.getLogger(__name__)

STOPPING_RULES = ("ftest", "aic", "bic", "fixed")
COLLINEAR_TOLERANCE = 1e-10
ORTHOGONALIZATION_PASSES = 2


@dataclass
class FrolsReport:
    """Terms in selection order with their ERR and the final parameters."""
    selected: List[RegressorTerm]
    indices: List[int]
    err: np.ndarray
    theta: np.ndarray
    criterion: np.ndarray

    def mask(self, n_terms: int) -> np.ndarray:
        mask = np.zeros(n_terms, dtype=bool)
        mask[self.indices] = True
        return mask


def err_coefficient(x: np.ndarray, y: np.ndarray) -> float:
    """Normalized energy coefficient (x'y)^2 / ((x'x)(y'y)), the squared cosine."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xx, yy = x @ x, y @ y
    if xx == 0 or yy == 0:
        raise ValueError("ERR is undefined for a zero vector")
    return float((x @ y) ** 2 / (xx * yy))


def _information_criterion(rss: float, n: int, m: int, stop: str) -> float:
    charge = 2.0 if stop == "aic" else np.log(n)
    return n * np.log(rss / n) + charge * m


def _partial_f(rss: float, new_rss: float, n: int, m: int) -> float:
    dof = n - m
    if new_rss <= 0:
        return np.inf
    return (rss - new_rss) / (new_rss / dof)


def orthogonal_forward_regression(psi: np.ndarray,
                                  y: np.ndarray,
                                  stop: str = "ftest",
                                  n_terms: Optional[int] = None,
                                  alpha: float = config.ALPHA) -> Tuple[List[int], np.ndarray, np.ndarray]:
    """
    Greedy selection of columns of ``psi`` by error reduction ratio.

    Remaining candidates are orthogonalized against every selected column by
    modified Gram-Schmidt, applied twice. The stopping rules are:

    - ``"ftest"``: the best candidate enters only if its partial F statistic
      (RSS drop over RSS / (N - m)) exceeds the squared two-sided t critical
      value at ``alpha`` divided by the number of candidates it was picked
      from. The division accounts for taking the maximum over the pool.
    - ``"aic"`` / ``"bic"``: the search ends before the first term that
      increases n ln(RSS/n) + 2m, respectively n ln(RSS/n) + m ln(n).
    - ``"fixed"``: exactly ``n_terms`` columns are chosen when possible.

    Args:
        psi: (N, M) candidate matrix
        y: Target vector
        stop: One of ``STOPPING_RULES``
        n_terms: Term budget for the fixed rule (also caps the other rules)
        alpha: Family-wise significance level of the F-test rule

    Returns:
        (selected column indices, ERR per selected column, criterion trace)
    """
    if stop not in STOPPING_RULES:
        raise ConfigError(f"Unknown stopping rule '{stop}', expected one of {STOPPING_RULES}")
    if stop == "fixed" and (n_terms is None or n_terms < 1):
        raise ConfigError("The fixed stopping rule needs a positive n_terms")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")

    psi = np.asarray(psi, dtype=float)
    y = np.asarray(y, dtype=float)
    n, n_candidates = psi.shape
    y_energy = float(y @ y)
    if y_energy == 0:
        raise DegenerateTarget("The target is identically zero")

    original_energy = np.sum(psi ** 2, axis=0)
    available = original_energy > 0
    residual = psi.copy()
    budget = min(n_candidates, n - 1, n_terms if n_terms is not None else n_candidates)

    selected, errs, trace = [], [], []
    rss = y_energy
    previous_criterion = np.inf
    while len(selected) < budget:
        energy = np.sum(residual ** 2, axis=0)
        valid = available & (energy > COLLINEAR_TOLERANCE * original_energy)
        if not valid.any():
            logger.debug("No linearly independent candidate left after %d terms", len(selected))
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            err = np.where(valid, (residual.T @ y) ** 2 / (energy * y_energy), -1.0)
        j = int(np.argmax(err))
        new_rss = max(rss - err[j] * y_energy, 0.0)
        m = len(selected) + 1

        if stop == "ftest":
            statistic = _partial_f(rss, new_rss, n, m)
            threshold = t_critical(alpha / int(valid.sum()), n - m) ** 2
            if statistic < threshold:
                logger.debug("Partial F %.3g below %.3g after %d terms", statistic, threshold, m - 1)
                break
            trace.append(new_rss)
        elif stop in ("aic", "bic") and new_rss > 0:
            criterion = _information_criterion(new_rss, n, m, stop)
            if criterion > previous_criterion:
                break
            previous_criterion = criterion
            trace.append(criterion)
        else:
            trace.append(new_rss)

        selected.append(j)
        errs.append(float(err[j]))
        rss = new_rss
        available[j] = False

        q = residual[:, j] / np.sqrt(energy[j])
        for _ in range(ORTHOGONALIZATION_PASSES):
            residual -= np.outer(q, q @ residual)

        if rss <= np.finfo(float).eps * y_energy:
            break

    return selected, np.array(errs), np.array(trace)


def frols_select(dictionary: Dictionary,
                 dataset: Dataset,
                 stop: str = "ftest",
                 n_terms: Optional[int] = None,
                 alpha: float = config.ALPHA) -> FrolsReport:
    """
    Run FROLS over a whole dictionary.

    Args:
        dictionary: Candidate terms
        dataset: Measured data
        stop: One of ``STOPPING_RULES``
        n_terms: Term budget for the fixed rule
        alpha: Significance level of the F-test rule

    Returns:
        FrolsReport with parameters re-estimated by least squares

    Raises:
        SearchAborted: When no term passes the stopping rule
    """
    check_compatible(dataset, dictionary)
    psi = build_regression_matrix(dataset, dictionary, np.ones(len(dictionary), dtype=bool))
    y = target(dataset, dictionary)
    indices, err, criterion = orthogonal_forward_regression(psi, y, stop, n_terms, alpha)
    if not indices:
        raise SearchAborted(f"FROLS selected no term under the {stop} rule")
    theta = least_squares(psi[:, indices], y)
    return FrolsReport(selected=[dictionary[i] for i in indices], indices=indices,
                       err=err, theta=theta, criterion=criterion)


def run_frols(dataset: Dataset,
              dict_config: Optional[DictionaryConfig] = None,
              stop: str = "ftest",
              n_terms: Optional[int] = None,
              seed: int = config.SEED,
              alpha: float = config.ALPHA) -> Tuple[CandidateModel, RunReport]:
    """
    FROLS wrapped in the same report schema as the swarm search.

    FROLS is deterministic; ``seed`` is only recorded.
    """
    started = time.perf_counter()
    dictionary = build_dictionary(dict_config or DictionaryConfig())
    report = frols_select(dictionary, dataset, stop, n_terms, alpha)
    model = CandidateModel(mask=report.mask(len(dictionary)),
                           theta=report.theta[np.argsort(report.indices)])
    y = target(dataset, dictionary)

    free_run_rms: Optional[float] = None
    try:
        y_free = free_run_simulation(model, dictionary, dataset)
        model.rrse = rrse(y, y_free)
        free_run_rms = rms_error(y, y_free)
    except Diverged:
        logger.warning("FROLS model diverges in free run")
        model.rrse = float("inf")
    model.penalty = 1.0
    model.fitness = model.rrse
    model.model_size = model.n_terms
    elapsed_ms = (time.perf_counter() - started) * 1000.0

    run_report = RunReport(
        method="frols",
        structure=[str(term) for term in report.selected],
        theta=[float(v) for v in report.theta],
        fitness=float(model.fitness),
        rrse=float(model.rrse),
        penalty=1.0,
        n_redundant=0,
        model_size=model.n_terms,
        trace=[float(v) for v in report.criterion],
        elapsed_ms=elapsed_ms,
        seed=seed,
        converged_at=len(report.indices),
        one_step_rrse=rrse(y, one_step_ahead(model, dictionary, dataset)),
        rms_error=free_run_rms,
        err=[float(v) for v in report.err],
    )
    return model, run_report
