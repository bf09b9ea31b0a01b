"""
Configuration settings for NARX model structure selection.
"""

# Candidate dictionary configuration
NY: int = 4  # Maximum output lag
NX: int = 4  # Maximum input lag, applied to every input channel
DEGREE: int = 3  # Nonlinearity degree of the polynomial expansion
DELAY: int = 1  # Input delay d

# Regressor significance testing
ALPHA: float = 0.05  # Significance level of the t-test
T_TOLERANCE: float = 1e-6  # Absolute tolerance of the Student-t quantile

# Swarm configuration
MAX_ITER: int = 30  # Number of swarm iterations
N_AGENTS: int = 10  # Number of search agents
G0: float = 100.0  # Initial gravitational constant
GSA_ALPHA: float = 23.0  # Decay rate of the gravitational constant
INERTIA: float = 0.5  # Constant inertia factor
INERTIA_SCHEDULE: str = "constant"  # "constant" or "linear" (0.9 -> 0.4)
V_MAX: float = 6.0  # Velocity clamp
EPSILON: float = 1e-9  # Added to agent distances in the force computation
MAX_REGENERATIONS: int = 10  # Regeneration rounds before an empty population aborts
SEED: int = 42  # Default master seed

# Simulation
DIVERGENCE_LIMIT: float = 1e10  # Free-run magnitude treated as divergence

# Logistic NARX estimation
LEARNING_RATE: float = 0.01  # SGD step size
EPOCHS: int = 100  # Maximum number of SGD epochs
BATCH_SIZE: int = 1  # 1 means pure stochastic updates
SGD_TOLERANCE: float = 1e-6  # Early stop when the epoch NLL improves less than this
PROBABILITY_CLIP: float = 1e-12  # Probabilities are clipped before taking logs
TRAIN_SPLIT: float = 0.8  # Fraction of samples used for training

# Benchmark harness
N_SAMPLES: int = 500  # Samples per simulated realization
WARMUP: int = 100  # Initial samples discarded from every simulation
N_RUNS: int = 50  # Desk-scale number of Monte-Carlo runs
N_RUNS_FULL: int = 300  # Number of runs of a full-scale benchmark
MAX_GENERATION_ATTEMPTS: int = 5  # Reseeding attempts for non-finite trajectories
N_JOBS: int = 1  # Parallel workers for candidate evaluation and benchmark runs

# Sensitivity study grid: (max_iter, n_agents)
SWEEP_GRID: list = [(30, 1), (30, 5), (30, 20), (5, 10), (15, 10), (50, 10)]

# Output configuration
OUTPUT_DIR: str = "outputs"  # Directory for reports
SCHEMA_VERSION: int = 1  # Version tag written into every JSON report
