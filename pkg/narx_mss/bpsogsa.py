"""
Binary hybrid PSO-GSA search engine.

Agents live in a binary space of ``noV`` dimensions. Positions and velocities
are stored as (noV, n_agents) matrices, one column per agent. Velocities are
continuous and are mapped to bit-flip probabilities by an arctan transfer
function.

All random draws come from the single generator held by the swarm state and
are consumed in a fixed order per iteration: regenerations of empty agents,
then force weights, then velocity weights, then flip draws. Fitness
evaluation itself draws nothing, so parallel evaluation cannot change a run.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from . import config
from .exceptions import ConfigError, EmptyModel, SearchAborted

logger = logging.getLogger(__name__)

# evaluate(mask) -> (fitness, encoded mask); raises EmptyModel for empty candidates
EvaluateFn = Callable[[np.ndarray], Tuple[float, np.ndarray]]

INERTIA_SCHEDULES = ("constant", "linear")
INERTIA_START = 0.9
INERTIA_END = 0.4


@dataclass(frozen=True)
class SwarmConfig:
    """Settings of the binary PSO-GSA search."""
    n_agents: int = config.N_AGENTS
    max_iter: int = config.MAX_ITER
    g0: float = config.G0
    alpha: float = config.GSA_ALPHA
    inertia: float = config.INERTIA
    inertia_schedule: str = config.INERTIA_SCHEDULE
    v_max: float = config.V_MAX
    epsilon: float = config.EPSILON
    max_regenerations: int = config.MAX_REGENERATIONS
    seed: int = config.SEED
    n_jobs: int = config.N_JOBS
    progress: bool = False

    def __post_init__(self):
        if self.n_agents < 1:
            raise ConfigError("At least one agent is required")
        if self.max_iter < 1:
            raise ConfigError("At least one iteration is required")
        if self.g0 <= 0:
            raise ConfigError("G0 must be positive")
        if self.v_max <= 0:
            raise ConfigError("v_max must be positive")
        if self.inertia_schedule not in INERTIA_SCHEDULES:
            raise ConfigError(f"Unknown inertia schedule '{self.inertia_schedule}', "
                              f"expected one of {INERTIA_SCHEDULES}")
        if self.max_regenerations < 0:
            raise ConfigError("max_regenerations cannot be negative")


@dataclass
class SwarmState:
    """Positions, velocities and bookkeeping of one search."""
    positions: np.ndarray
    velocities: np.ndarray
    fitness: np.ndarray
    masses: np.ndarray
    gbest_position: np.ndarray
    gbest_fitness: float
    rng: np.random.Generator = field(repr=False)
    t: int = 0
    converged_at: int = 0
    trace: List[float] = field(default_factory=list)

    @property
    def n_dimensions(self) -> int:
        return self.positions.shape[0]

    @property
    def n_agents(self) -> int:
        return self.positions.shape[1]


def init_population(n_dimensions: int, swarm_config: SwarmConfig) -> SwarmState:
    """
    Random binary population with zero velocities.

    Args:
        n_dimensions: Number of candidate regressors (noV)
        swarm_config: Search settings, including the master seed

    Returns:
        Initial swarm state
    """
    if n_dimensions < 1:
        raise ConfigError("The search space needs at least one dimension")
    rng = np.random.default_rng(swarm_config.seed)
    n = swarm_config.n_agents
    positions = rng.random((n_dimensions, n)) < 0.5
    return SwarmState(
        positions=positions,
        velocities=np.zeros((n_dimensions, n)),
        fitness=np.full(n, np.inf),
        masses=np.full(n, 1.0 / n),
        gbest_position=positions[:, 0].copy(),
        gbest_fitness=np.inf,
        rng=rng,
    )


def gravitational_constant(t: int, max_iter: int, g0: float, alpha: float) -> float:
    """G(t) = G0 * exp(-alpha * t / max_iter)."""
    return float(g0 * np.exp(-alpha * t / max_iter))


def compute_masses(fitness: Sequence[float]) -> np.ndarray:
    """
    Normalized masses for a minimization problem.

    m_i = (fit_i - worst) / (best - worst) and M_i = m_i / sum(m). Agents with
    infinite fitness get zero mass; if every finite fitness is equal the
    finite agents share the mass uniformly.
    """
    fitness = np.asarray(fitness, dtype=float)
    finite = np.isfinite(fitness)
    if not finite.any():
        return np.full(fitness.size, 1.0 / fitness.size)

    best = fitness[finite].min()
    worst = fitness[finite].max()
    masses = np.zeros(fitness.size)
    if best == worst:
        masses[finite] = 1.0
    else:
        masses[finite] = (fitness[finite] - worst) / (best - worst)
    return masses / masses.sum()


def kbest_count(t: int, max_iter: int, n_agents: int) -> int:
    """Number of attracting agents, shrinking linearly from n_agents to 1."""
    return max(1, int(round(n_agents - (n_agents - 1) * t / max_iter)))


def compute_accelerations(state: SwarmState,
                          g: float,
                          n_kbest: int,
                          epsilon: float = config.EPSILON,
                          kappa: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Gravitational accelerations of every agent.

    a_i = sum over j in Kbest of kappa_ij * G * M_j * (x_j - x_i) / (R_ij + eps),
    with R_ij the Euclidean distance between the binary positions.

    Args:
        state: Current swarm
        g: Gravitational constant
        n_kbest: Number of heaviest agents exerting force
        epsilon: Added to distances
        kappa: (n_agents, n_agents) weights; drawn from the state's generator if omitted

    Returns:
        (noV, n_agents) acceleration matrix
    """
    n = state.n_agents
    if kappa is None:
        kappa = state.rng.random((n, n))
    x = state.positions.astype(float)
    kbest = np.argsort(-state.masses, kind="stable")[:n_kbest]

    accel = np.zeros_like(x)
    for j in kbest:
        # the column of agent j itself has zero difference and contributes nothing
        diff = x[:, [j]] - x
        distance = np.sqrt(np.sum(diff ** 2, axis=0))
        accel += kappa[:, j] * g * state.masses[j] * diff / (distance + epsilon)
    return accel


def adaptive_coefficients(t: int, max_iter: int) -> Tuple[float, float]:
    """c1' = 2 - 2 t^3 / T^3 and c2' = 2 + 2 t^3 / T^3."""
    ratio = (t / max_iter) ** 3
    return 2.0 - 2.0 * ratio, 2.0 + 2.0 * ratio


def inertia_weight(t: int, swarm_config: SwarmConfig) -> float:
    if swarm_config.inertia_schedule == "linear":
        return INERTIA_START - (INERTIA_START - INERTIA_END) * t / swarm_config.max_iter
    return swarm_config.inertia


def update_velocities(state: SwarmState,
                      accel: np.ndarray,
                      c1: float,
                      c2: float,
                      zeta: float,
                      v_max: float = config.V_MAX,
                      kappa: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> np.ndarray:
    """
    v <- zeta v + c1' k1 a + c2' k2 (gbest - x), clamped to [-v_max, v_max].

    ``kappa`` holds the two (noV, n_agents) weight matrices; they are drawn
    from the state's generator if omitted.
    """
    if kappa is None:
        shape = state.velocities.shape
        kappa = (state.rng.random(shape), state.rng.random(shape))
    k1, k2 = kappa
    x = state.positions.astype(float)
    pull = state.gbest_position.astype(float)[:, None] - x
    velocities = zeta * state.velocities + c1 * k1 * accel + c2 * k2 * pull
    return np.clip(velocities, -v_max, v_max)


def transfer_probability(v):
    """S(v) = |2/pi * arctan(pi/2 * v)|, the bit-flip probability."""
    return np.abs(2.0 / np.pi * np.arctan(np.pi / 2.0 * np.asarray(v, dtype=float)))


def update_positions(positions: np.ndarray,
                     velocities: np.ndarray,
                     rng: np.random.Generator,
                     kappa: Optional[np.ndarray] = None) -> np.ndarray:
    """Flip every bit whose draw falls below its transfer probability."""
    if kappa is None:
        kappa = rng.random(positions.shape)
    return np.logical_xor(positions, kappa < transfer_probability(velocities))


def _try_evaluate(evaluate: EvaluateFn, mask: np.ndarray) -> Optional[Tuple[float, np.ndarray]]:
    try:
        return evaluate(mask)
    except EmptyModel:
        return None


def _evaluate_batch(evaluate: EvaluateFn,
                    masks: List[np.ndarray],
                    n_jobs: int) -> List[Optional[Tuple[float, np.ndarray]]]:
    if n_jobs == 1 or len(masks) == 1:
        return [_try_evaluate(evaluate, mask) for mask in masks]
    return Parallel(n_jobs=n_jobs)(delayed(_try_evaluate)(evaluate, mask) for mask in masks)


def evaluate_agents(state: SwarmState, evaluate: EvaluateFn, swarm_config: SwarmConfig) -> None:
    """
    Evaluate every agent and write back fitness and encoded positions.

    Agents whose candidate is empty are given a fresh random position and are
    evaluated again, for at most ``max_regenerations`` rounds. Agents still
    empty afterwards get infinite fitness, unless the whole population is
    empty, which aborts the search.
    """
    pending = list(range(state.n_agents))
    for attempt in range(swarm_config.max_regenerations + 1):
        masks = [state.positions[:, i].copy() for i in pending]
        results = _evaluate_batch(evaluate, masks, swarm_config.n_jobs)

        empty = []
        for i, result in zip(pending, results):
            if result is None:
                empty.append(i)
                continue
            fitness, encoded = result
            state.fitness[i] = fitness
            state.positions[:, i] = encoded

        if not empty:
            return
        if attempt == swarm_config.max_regenerations:
            break
        logger.debug("Regenerating %d empty agents (round %d)", len(empty), attempt + 1)
        for i in empty:
            state.positions[:, i] = state.rng.random(state.n_dimensions) < 0.5
            state.velocities[:, i] = 0.0
        pending = empty

    if len(empty) == state.n_agents:
        raise SearchAborted(f"Every agent stayed empty after "
                            f"{swarm_config.max_regenerations} regenerations")
    logger.warning("%d agents stayed empty; assigning infinite fitness", len(empty))
    state.fitness[empty] = np.inf


def step(state: SwarmState, evaluate: EvaluateFn, swarm_config: SwarmConfig) -> SwarmState:
    """
    One iteration: evaluate, update gbest, then move every agent.

    Args:
        state: Swarm to advance in place
        evaluate: Fitness callback returning (fitness, encoded mask)
        swarm_config: Search settings

    Returns:
        The advanced state
    """
    evaluate_agents(state, evaluate, swarm_config)

    best = int(np.argmin(state.fitness))
    if state.fitness[best] < state.gbest_fitness:
        state.gbest_fitness = float(state.fitness[best])
        state.gbest_position = state.positions[:, best].copy()
        state.converged_at = state.t
    state.trace.append(state.gbest_fitness)

    t, max_iter = state.t, swarm_config.max_iter
    state.masses = compute_masses(state.fitness)
    g = gravitational_constant(t, max_iter, swarm_config.g0, swarm_config.alpha)
    accel = compute_accelerations(state, g, kbest_count(t, max_iter, state.n_agents),
                                  swarm_config.epsilon)
    c1, c2 = adaptive_coefficients(t, max_iter)
    state.velocities = update_velocities(state, accel, c1, c2, inertia_weight(t, swarm_config),
                                         swarm_config.v_max)
    state.positions = update_positions(state.positions, state.velocities, state.rng)
    state.t += 1
    return state


def optimize(n_dimensions: int, evaluate: EvaluateFn, swarm_config: SwarmConfig) -> SwarmState:
    """
    Run the full search.

    Args:
        n_dimensions: Number of candidate regressors (noV)
        evaluate: Fitness callback returning (fitness, encoded mask)
        swarm_config: Search settings

    Returns:
        Final swarm state; ``gbest_position`` holds the best encoding found
    """
    state = init_population(n_dimensions, swarm_config)
    for _ in tqdm(range(swarm_config.max_iter), desc="Swarm iterations",
                  disable=not swarm_config.progress):
        step(state, evaluate, swarm_config)
        logger.debug("Iteration %d: gbest fitness %.6g", state.t, state.gbest_fitness)
    return state
