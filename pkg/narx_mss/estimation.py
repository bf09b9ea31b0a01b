"""
Least-squares estimation, free-run simulation, fit metrics and regressor
significance testing.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import qr, solve_triangular
from scipy.optimize import brentq
from scipy.special import betainc

from . import config
from .data import Dataset
from .dictionary import (OUTPUT, Dictionary, RegressorTerm, build_regression_matrix,
                         target, term_column)
from .exceptions import DegenerateTarget, Diverged, EmptyModel, SingularModel

logger = logging.getLogger(__name__)


@dataclass
class CandidateModel:
    """
    A selected structure with its parameters and fitness diagnostics.

    ``fitness`` stays at +inf until the candidate has been evaluated.
    """
    mask: np.ndarray
    theta: np.ndarray
    rrse: float = float("nan")
    penalty: float = float("nan")
    fitness: float = float("inf")
    n_redundant: int = 0
    model_size: int = 0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.size != int(self.mask.sum()):
            raise ValueError(f"{self.theta.size} parameters for {int(self.mask.sum())} terms")

    @property
    def n_terms(self) -> int:
        return int(self.mask.sum())

    def terms(self, dictionary: Dictionary) -> List[RegressorTerm]:
        return dictionary.selected(self.mask)


@dataclass
class SignificanceReport:
    """Outcome of testing H0: theta_j = 0 for every parameter."""
    se: np.ndarray
    t0: np.ndarray
    t_crit: float
    reject_null: np.ndarray


def _upper_triangular(psi: np.ndarray) -> np.ndarray:
    r = qr(psi, mode="r")[0][:psi.shape[1]]
    _check_rank(r, psi.shape)
    return r


def _check_rank(r: np.ndarray, shape: Tuple[int, int]) -> None:
    diagonal = np.abs(np.diag(r))
    if diagonal.size == 0 or not np.all(np.isfinite(diagonal)):
        raise SingularModel("Regression matrix is empty or not finite")
    tol = max(shape) * np.finfo(float).eps * diagonal.max()
    if diagonal.min() <= tol:
        raise SingularModel(f"Regression matrix is rank deficient "
                            f"(|R_jj| min {diagonal.min():.3g}, tol {tol:.3g})")


def least_squares(psi: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Solve min ||y - psi theta|| through a QR decomposition.

    Args:
        psi: Regression matrix with at least as many rows as columns
        y: Target vector

    Returns:
        Parameter vector
    """
    psi = np.asarray(psi, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = psi.shape
    if n < m:
        raise SingularModel(f"{n} samples cannot determine {m} parameters")
    if not np.all(np.isfinite(psi)):
        raise SingularModel("Regression matrix contains non-finite values")
    q, r = qr(psi, mode="economic")
    _check_rank(r, psi.shape)
    return solve_triangular(r, q.T @ y)


def estimate(mask: np.ndarray, dictionary: Dictionary, dataset: Dataset) -> CandidateModel:
    """Least-squares fit of the structure selected by ``mask``."""
    psi = build_regression_matrix(dataset, dictionary, mask)
    return CandidateModel(mask=mask, theta=least_squares(psi, target(dataset, dictionary)))


def free_run_simulation(model: CandidateModel,
                        dictionary: Dictionary,
                        dataset: Dataset,
                        start: Optional[int] = None,
                        limit: float = config.DIVERGENCE_LIMIT) -> np.ndarray:
    """
    Simulate the model recursively from its own past predictions.

    The first ``start`` samples (the dictionary's maximum lag by default) are
    seeded with the measured output; inputs are always measured.

    Args:
        model: Estimated candidate
        dictionary: Candidate terms
        dataset: Inputs over the full horizon and the seed outputs
        start: Number of seeded samples
        limit: Magnitude beyond which the simulation is declared divergent

    Returns:
        Simulated output for times start..N-1
    """
    start = dictionary.max_lag if start is None else start
    terms = model.terms(dictionary)
    if not terms:
        raise EmptyModel("Cannot simulate a model without regressors")
    theta = model.theta
    n = dataset.n_samples

    # Input factors do not depend on the simulation and are evaluated up front.
    input_part = np.column_stack([
        term_column(dataset, RegressorTerm(tuple(f for f in t.factors if f.signal != OUTPUT)), start)
        for t in terms])

    output_lags = sorted({f.lag for t in terms for f in t.factors if f.signal == OUTPUT})
    if not output_lags:
        y_hat = input_part @ theta
        _check_divergence(y_hat, limit)
        return y_hat

    lags = np.array(output_lags)
    exponents = np.zeros((len(terms), len(output_lags)))
    for j, t in enumerate(terms):
        for f in t.factors:
            if f.signal == OUTPUT:
                exponents[j, output_lags.index(f.lag)] = f.exponent

    y_sim = np.empty(n)
    y_sim[:start] = dataset.output[:start]
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(start, n):
            output_part = np.prod(y_sim[k - lags] ** exponents, axis=1)
            value = (input_part[k - start] * output_part) @ theta
            if not np.isfinite(value) or abs(value) > limit:
                raise Diverged(f"Free-run simulation diverged at sample {k}")
            y_sim[k] = value
    return y_sim[start:]


def _check_divergence(y_hat: np.ndarray, limit: float) -> None:
    if not np.all(np.isfinite(y_hat)) or np.any(np.abs(y_hat) > limit):
        raise Diverged("Simulated output is not finite or exceeds the divergence limit")


def one_step_ahead(model: CandidateModel, dictionary: Dictionary, dataset: Dataset) -> np.ndarray:
    """Prediction from measured past outputs over the evaluation window."""
    return build_regression_matrix(dataset, dictionary, model.mask) @ model.theta


def rrse(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Relative root squared error: ||y - y_hat|| / ||y - mean(y)||."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ValueError(f"Length mismatch: {y.shape} vs {y_hat.shape}")
    spread = np.sum((y - y.mean()) ** 2)
    if spread == 0:
        raise DegenerateTarget("The target is constant over the evaluation window")
    return float(np.sqrt(np.sum((y - y_hat) ** 2)) / np.sqrt(spread))


def rms_error(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Root mean squared error."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ValueError(f"Length mismatch: {y.shape} vs {y_hat.shape}")
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def residual_variance(psi: np.ndarray, y: np.ndarray, theta: np.ndarray) -> float:
    """Unbiased noise variance of the one-step-ahead residuals, sum(e^2) / (N - m)."""
    n, m = psi.shape
    if n <= m:
        raise ValueError(f"Need more samples ({n}) than parameters ({m})")
    residuals = y - psi @ theta
    return float(residuals @ residuals / (n - m))


def standard_errors(psi: np.ndarray, sigma2_e: float) -> np.ndarray:
    """
    Standard errors sqrt(sigma2_e * V_jj) with V = (psi' psi)^-1.

    V is obtained from the triangular factor of psi, V = R^-1 R^-T, so its
    diagonal is the squared row norms of R^-1.
    """
    psi = np.asarray(psi, dtype=float)
    r = _upper_triangular(psi)
    r_inv = solve_triangular(r, np.eye(r.shape[0]))
    return np.sqrt(sigma2_e * np.sum(r_inv ** 2, axis=1))


@lru_cache(maxsize=1024)
def t_critical(alpha: float, dof: int, tol: float = config.T_TOLERANCE) -> float:
    """
    Two-sided Student-t critical value t_{alpha/2, dof}.

    Inverts the upper tail 0.5 * I_{dof/(dof+t^2)}(dof/2, 1/2), where I is the
    regularized incomplete beta function.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if dof < 1:
        raise ValueError(f"Degrees of freedom must be at least 1, got {dof}")

    def excess_tail(t: float) -> float:
        return 0.5 * betainc(dof / 2.0, 0.5, dof / (dof + t * t)) - alpha / 2.0

    upper = 10.0
    while excess_tail(upper) > 0:
        upper *= 2.0
    return float(brentq(excess_tail, 0.0, upper, xtol=tol * 1e-3, rtol=1e-12))


def t_test(theta: np.ndarray, se: np.ndarray, alpha: float, dof: int) -> SignificanceReport:
    """
    Test every parameter against zero.

    A zero standard error counts as infinitely significant unless the
    parameter itself is zero.
    """
    theta = np.asarray(theta, dtype=float)
    se = np.asarray(se, dtype=float)
    if theta.shape != se.shape:
        raise ValueError("theta and se must have the same length")
    if np.any(se < 0):
        raise ValueError("Standard errors cannot be negative")
    t_crit = t_critical(float(alpha), int(dof))
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = np.where(se > 0, theta / np.where(se > 0, se, 1.0),
                      np.where(theta != 0, np.sign(theta) * np.inf, 0.0))
    return SignificanceReport(se=se, t0=t0, t_crit=t_crit, reject_null=np.abs(t0) >= t_crit)


def significance(psi: np.ndarray, y: np.ndarray, theta: np.ndarray, alpha: float) -> SignificanceReport:
    """t-test of a least-squares fit using its one-step-ahead residuals."""
    n, m = psi.shape
    sigma2_e = residual_variance(psi, y, theta)
    return t_test(theta, standard_errors(psi, sigma2_e), alpha, n - m)


def prune_insignificant(model: CandidateModel,
                        dictionary: Dictionary,
                        dataset: Dataset,
                        alpha: float = config.ALPHA) -> Tuple[CandidateModel, int]:
    """
    Remove every regressor whose parameter is not significant, in one pass,
    and re-estimate the remaining ones.

    Args:
        model: Estimated candidate
        dictionary: Candidate terms
        dataset: Measured data
        alpha: Significance level

    Returns:
        (pruned model, number of removed regressors)
    """
    psi = build_regression_matrix(dataset, dictionary, model.mask)
    y = target(dataset, dictionary)
    report = significance(psi, y, model.theta, alpha)
    keep = report.reject_null
    if not keep.any():
        raise EmptyModel("No regressor is significant")

    n_redundant = int((~keep).sum())
    if n_redundant == 0:
        return CandidateModel(mask=model.mask.copy(), theta=model.theta.copy()), 0

    mask = model.mask.copy()
    mask[np.flatnonzero(model.mask)[~keep]] = False
    theta = least_squares(psi[:, keep], y)
    return CandidateModel(mask=mask, theta=theta, n_redundant=n_redundant), n_redundant


def refine_to_fixpoint(model: CandidateModel,
                       dictionary: Dictionary,
                       dataset: Dataset,
                       alpha: float = config.ALPHA) -> Tuple[CandidateModel, int]:
    """
    Repeat one-pass pruning until every remaining regressor is significant.

    If a pass would empty the model, the last non-empty model is kept and
    its terms, none of which is significant, are counted in
    ``extras["n_insignificant"]``.

    Returns:
        (refined model, total number of removed regressors)
    """
    removed = 0
    while True:
        try:
            pruned, n_redundant = prune_insignificant(model, dictionary, dataset, alpha)
        except EmptyModel:
            logger.warning("Refinement would empty the model; keeping %d terms", model.n_terms)
            model.extras["n_insignificant"] = model.n_terms
            return model, removed
        if n_redundant == 0:
            return pruned, removed
        removed += n_redundant
        model = pruned
