"""
Simulated benchmark systems.

S1-S6 are polynomial NARX regression systems with known structure; C1 and C2
are binary classification systems driven by uniform inputs. Every generator
draws its inputs and noise from one seeded generator and starts from zero
initial conditions.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import config
from .data import Dataset
from .dictionary import OUTPUT, RegressorTerm, parse_term
from .exceptions import ConfigError, Diverged

logger = logging.getLogger(__name__)

# extra(x, e, k) -> contribution of moving-average noise terms at time k
NoiseTerms = Callable[[np.ndarray, np.ndarray, int], float]


@dataclass(frozen=True)
class SimulatedSystem:
    """
    A regression system y_k = sum(theta_j * term_j(k)) + e_k.

    Attributes:
        system_id: Name such as "S1"
        truth: (term string, coefficient) pairs of the process part
        input_law: ("uniform", low, high) or ("normal", mean, std)
        noise_std: Standard deviation of the white noise e_k
        moving_average: Noise-process terms used during generation only
    """
    system_id: str
    truth: Tuple[Tuple[str, float], ...]
    input_law: Tuple[str, float, float]
    noise_std: float
    moving_average: Optional[NoiseTerms] = None

    @property
    def true_terms(self) -> List[RegressorTerm]:
        return [parse_term(text, n_inputs=1) for text, _ in self.truth]

    @property
    def true_theta(self) -> np.ndarray:
        return np.array([coefficient for _, coefficient in self.truth])

    @property
    def max_lag(self) -> int:
        return max(term.max_lag for term in self.true_terms)

    def draw_inputs(self, rng: np.random.Generator, n: int) -> np.ndarray:
        law, a, b = self.input_law
        if law == "uniform":
            return rng.uniform(a, b, n)
        return rng.normal(a, b, n)


def _s5_moving_average(x: np.ndarray, e: np.ndarray, k: int) -> float:
    e1 = e[k - 1] if k >= 1 else 0.0
    e2 = e[k - 2] if k >= 2 else 0.0
    x1 = x[k - 1] if k >= 1 else 0.0
    return 0.2 * e1 - 0.3 * x1 * e2


SYSTEMS: Dict[str, SimulatedSystem] = {
    "S1": SimulatedSystem(
        "S1",
        (("y(k-1)", -1.7), ("y(k-2)", -0.8), ("x1(k-1)", 1.0), ("x1(k-2)", 0.81)),
        ("uniform", -2.0, 2.0), 0.01),
    "S2": SimulatedSystem(
        "S2",
        (("y(k-1)", 0.8), ("x1(k-1)", 0.4), ("x1(k-1)^2", 0.4), ("x1(k-1)^3", 0.4)),
        ("normal", 0.0, 0.3), 0.01),
    "S3": SimulatedSystem(
        "S3",
        (("y(k-1)^3", 0.2), ("y(k-1)*x1(k-1)", 0.7), ("x1(k-2)^2", 0.6),
         ("y(k-2)*x1(k-2)^2", -0.7), ("y(k-2)", -0.5)),
        ("uniform", -1.0, 1.0), 0.01),
    "S4": SimulatedSystem(
        "S4",
        (("y(k-1)*x1(k-1)", 0.7), ("y(k-2)", -0.5), ("x1(k-2)^2", 0.6),
         ("y(k-2)*x1(k-2)^2", -0.7)),
        ("uniform", -1.0, 1.0), 0.04),
    "S5": SimulatedSystem(
        "S5",
        (("y(k-1)*x1(k-1)", 0.7), ("y(k-2)", -0.5), ("x1(k-2)^2", 0.6),
         ("y(k-2)*x1(k-2)^2", -0.7)),
        ("uniform", -1.0, 1.0), 0.02, _s5_moving_average),
    "S6": SimulatedSystem(
        "S6",
        (("y(k-2)", 0.75), ("x1(k-2)", 0.25), ("y(k-2)*x1(k-2)", -0.2)),
        ("normal", 0.0, 0.25), 0.02),
}

CLASSIFICATION_SYSTEMS = ("C1", "C2")
C1_TRUTH = (("x1(k-1)", 4.0), ("x1(k-2)^2", -3.0))


def get_system(system_id: str) -> SimulatedSystem:
    try:
        return SYSTEMS[system_id]
    except KeyError:
        raise ConfigError(f"Unknown system '{system_id}', expected one of {sorted(SYSTEMS)}") from None


def _past(signal: np.ndarray, k: int, lag: int) -> float:
    return signal[k - lag] if k >= lag else 0.0


def simulate(system: SimulatedSystem, x: np.ndarray, e: np.ndarray) -> np.ndarray:
    """
    Run the system recurrence on explicit input and noise sequences.

    Samples before time 0 are taken as zero.

    Args:
        system: System definition
        x: Input sequence
        e: White noise sequence of the same length

    Returns:
        Output sequence
    """
    x = np.asarray(x, dtype=float)
    e = np.asarray(e, dtype=float)
    if x.shape != e.shape:
        raise ValueError("Input and noise sequences must have the same length")
    terms = system.true_terms
    theta = system.true_theta
    y = np.zeros(x.size)
    for k in range(x.size):
        value = e[k]
        for coefficient, term in zip(theta, terms):
            product = 1.0
            for f in term.factors:
                signal = y if f.signal == OUTPUT else x
                product *= _past(signal, k, f.lag) ** f.exponent
            value += coefficient * product
        if system.moving_average is not None:
            value += system.moving_average(x, e, k)
        y[k] = value
    return y


def generate(system_id: str,
             n_samples: int = config.N_SAMPLES,
             seed: int = config.SEED,
             warmup: int = config.WARMUP) -> Dataset:
    """
    Draw one realization of a benchmark system.

    The first ``warmup`` samples are discarded. A non-finite trajectory is
    redrawn with the next seed, up to MAX_GENERATION_ATTEMPTS times.

    Args:
        system_id: "S1".."S6", or "C1"/"C2" for classification systems
        n_samples: Number of samples kept
        seed: Seed of the input and noise draws
        warmup: Number of leading samples discarded

    Returns:
        Dataset with one input channel (two for C2)
    """
    if system_id in CLASSIFICATION_SYSTEMS:
        return generate_classification(system_id, n_samples, seed)
    system = get_system(system_id)
    if n_samples < 1 or warmup < 0:
        raise ConfigError("n_samples must be positive and warmup non-negative")

    total = n_samples + warmup
    for attempt in range(config.MAX_GENERATION_ATTEMPTS):
        rng = np.random.default_rng(seed + attempt)
        x = system.draw_inputs(rng, total)
        e = rng.normal(0.0, system.noise_std, total)
        with np.errstate(over="ignore", invalid="ignore"):
            y = simulate(system, x, e)
        if np.all(np.isfinite(y)):
            return Dataset(x[warmup:, None], y[warmup:])
        logger.warning("%s trajectory with seed %d is not finite (attempt %d/%d)",
                       system_id, seed + attempt, attempt + 1, config.MAX_GENERATION_ATTEMPTS)
    raise Diverged(f"{system_id} produced non-finite trajectories for "
                   f"{config.MAX_GENERATION_ATTEMPTS} seeds starting at {seed}")


def generate_classification(system_id: str,
                            n_samples: int = 1000,
                            seed: int = config.SEED,
                            noise_scale: float = 0.0) -> Dataset:
    """
    Draw a binary classification dataset.

    C1: y_k = 1 iff 4 x_{k-1} - 3 x_{k-2}^2 + l_k > 0, with l_k logistic noise
    of scale ``noise_scale`` (none by default).

    C2: y_k = 1 iff -x_{k-1} sqrt|v_{k-1}| + 0.5 x_{k-1}^3 + sin(v_{k-2}) + e_k < 0,
    with e_k = w_k + 0.3 w_{k-1} + 0.6 w_{k-2} and w ~ N(0, 0.3^2).
    x and v are U(-1, 1) in both systems.
    """
    rng = np.random.default_rng(seed)
    if system_id == "C1":
        x = rng.uniform(-1.0, 1.0, n_samples)
        noise = rng.logistic(0.0, noise_scale, n_samples) if noise_scale > 0 else np.zeros(n_samples)
        eta = np.zeros(n_samples)
        eta[2:] = 4.0 * x[1:-1] - 3.0 * x[:-2] ** 2
        y = (eta + noise > 0).astype(float)
        return Dataset(x[:, None], y)

    if system_id == "C2":
        x = rng.uniform(-1.0, 1.0, n_samples)
        v = rng.uniform(-1.0, 1.0, n_samples)
        w = rng.normal(0.0, 0.3, n_samples)
        e = w.copy()
        e[1:] += 0.3 * w[:-1]
        e[2:] += 0.6 * w[:-2]
        score = np.zeros(n_samples)
        score[2:] = (-x[1:-1] * np.sqrt(np.abs(v[1:-1])) + 0.5 * x[1:-1] ** 3
                     + np.sin(v[:-2]) + e[2:])
        y = (score < 0).astype(float)
        y[:2] = 0.0
        return Dataset(np.column_stack([x, v]), y)

    raise ConfigError(f"Unknown classification system '{system_id}', "
                      f"expected one of {CLASSIFICATION_SYSTEMS}")
