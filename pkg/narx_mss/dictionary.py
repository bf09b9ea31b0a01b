"""
Candidate regressor dictionary for polynomial (MI)SO NARX models.

A regressor term is a monomial of lagged signals. Signal 0 is the output y,
signals 1..r are the input channels x1..xr. Terms are kept in canonical form:
factors sorted by (signal, lag), repeated factors merged into the exponent,
and the empty factor list is the constant term.
"""
import logging
import re
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import config
from .data import Dataset
from .exceptions import ConfigError, DataError, EmptyModel

logger = logging.getLogger(__name__)

OUTPUT = 0

_FACTOR_PATTERN = re.compile(r"^(y|x(\d+))\(k-(\d+)\)(?:\^(\d+))?$")


class Factor(NamedTuple):
    """One lagged signal raised to a positive power."""
    signal: int
    lag: int
    exponent: int = 1


def signal_name(signal: int) -> str:
    return "y" if signal == OUTPUT else f"x{signal}"


@dataclass(frozen=True)
class RegressorTerm:
    """A monomial of lagged signals; no factors means the constant term."""
    factors: Tuple[Factor, ...] = ()

    @classmethod
    def from_factors(cls, factors: Iterable[Tuple[int, int, int]]) -> "RegressorTerm":
        """
        Build a term in canonical form from unordered factors.

        Args:
            factors: (signal, lag, exponent) triples, possibly repeated

        Returns:
            Canonical term with merged exponents
        """
        merged = {}
        for signal, lag, exponent in factors:
            if lag < 1 or exponent < 1:
                raise ConfigError(f"Invalid factor ({signal}, {lag}, {exponent})")
            merged[(signal, lag)] = merged.get((signal, lag), 0) + exponent
        return cls(tuple(Factor(s, l, e) for (s, l), e in sorted(merged.items())))

    @property
    def degree(self) -> int:
        return sum(f.exponent for f in self.factors)

    @property
    def max_lag(self) -> int:
        return max((f.lag for f in self.factors), default=0)

    @property
    def is_constant(self) -> bool:
        return not self.factors

    @property
    def has_output(self) -> bool:
        return any(f.signal == OUTPUT for f in self.factors)

    def __str__(self) -> str:
        if self.is_constant:
            return "constant"
        parts = []
        for f in self.factors:
            text = f"{signal_name(f.signal)}(k-{f.lag})"
            if f.exponent > 1:
                text += f"^{f.exponent}"
            parts.append(text)
        return "*".join(parts)


def parse_term(text: str, n_inputs: Optional[int] = None) -> RegressorTerm:
    """
    Parse the printed form of a term, e.g. ``y(k-2)*x1(k-1)^2``.

    Args:
        text: Term string as produced by ``str(term)``
        n_inputs: Number of input channels; when given, ``x<i>`` with i
            above it is rejected

    Returns:
        Canonical RegressorTerm
    """
    text = text.strip().replace(" ", "")
    if text in ("constant", "1"):
        return RegressorTerm()
    factors = []
    for part in text.split("*"):
        match = _FACTOR_PATTERN.match(part)
        if match is None:
            raise ValueError(f"Cannot parse regressor factor '{part}'")
        signal = OUTPUT if match.group(1) == "y" else int(match.group(2))
        if match.group(1) != "y" and (signal < 1 or (n_inputs is not None and signal > n_inputs)):
            raise ValueError(f"Input channel x{signal} does not exist (inputs: {n_inputs})")
        factors.append((signal, int(match.group(3)), int(match.group(4) or 1)))
    return RegressorTerm.from_factors(factors)


@dataclass(frozen=True)
class DictionaryConfig:
    """Lag and degree settings that define the candidate set."""
    n_y: int = config.NY
    n_x: Tuple[int, ...] = (config.NX,)
    degree: int = config.DEGREE
    delay: int = config.DELAY
    autoregressive: bool = True

    def __post_init__(self):
        object.__setattr__(self, "n_x", tuple(int(n) for n in self.n_x))
        if self.degree < 1:
            raise ConfigError("The nonlinearity degree must be at least 1")
        if self.delay < 1:
            raise ConfigError("The input delay must be at least 1")
        if any(n < 0 for n in self.n_x):
            raise ConfigError("Input lags must be non-negative")
        if self.autoregressive and self.n_y < 1:
            raise ConfigError("The output lag must be at least 1 for autoregressive models")
        if not self.variables():
            raise ConfigError("The lag configuration yields no lagged variables")

    @property
    def n_inputs(self) -> int:
        return len(self.n_x)

    def variables(self) -> List[Tuple[int, int]]:
        """Lagged variables (signal, lag) in canonical order."""
        variables = []
        if self.autoregressive:
            variables.extend((OUTPUT, lag) for lag in range(1, self.n_y + 1))
        for channel, n in enumerate(self.n_x, start=1):
            variables.extend((channel, lag) for lag in range(self.delay, self.delay + n))
        return variables

    @property
    def max_lag(self) -> int:
        return max(lag for _, lag in self.variables())


@dataclass(frozen=True)
class Dictionary:
    """Ordered candidate regressors for one configuration."""
    config: DictionaryConfig
    terms: Tuple[RegressorTerm, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[RegressorTerm]:
        return iter(self.terms)

    def __getitem__(self, index: int) -> RegressorTerm:
        return self.terms[index]

    @property
    def max_lag(self) -> int:
        return self.config.max_lag

    def index(self, term: RegressorTerm) -> int:
        return self.terms.index(term)

    def mask_for(self, terms: Iterable[RegressorTerm]) -> np.ndarray:
        """Binary mask selecting the given terms."""
        mask = np.zeros(len(self), dtype=bool)
        for term in terms:
            mask[self.index(term)] = True
        return mask

    def selected(self, mask: np.ndarray) -> List[RegressorTerm]:
        return [self.terms[i] for i in np.flatnonzero(mask)]


def count_terms(dict_config: DictionaryConfig) -> int:
    """
    Number of candidate terms from the closed-form recursion
    n_0 = 1, n_j = n_{j-1} (n + j - 1) / j, summed over j = 0..degree,
    where n is the number of lagged variables.
    """
    n = len(dict_config.variables())
    total = n_j = 1
    for j in range(1, dict_config.degree + 1):
        n_j = n_j * (n + j - 1) // j
        total += n_j
    return total


def build_dictionary(dict_config: DictionaryConfig) -> Dictionary:
    """
    Enumerate every monomial of total degree 0..degree over the lagged variables.

    Args:
        dict_config: Lag and degree settings

    Returns:
        Dictionary ordered degree-major, then by canonical factor order
    """
    variables = dict_config.variables()
    terms = []
    for degree in range(dict_config.degree + 1):
        for combo in combinations_with_replacement(range(len(variables)), degree):
            terms.append(RegressorTerm.from_factors(
                (variables[i][0], variables[i][1], 1) for i in combo))
    logger.debug("Built dictionary with %d terms for %s", len(terms), dict_config)
    return Dictionary(dict_config, tuple(terms))


def search_space_size(n_r: int) -> int:
    """Number of distinct models over n_r candidates, 2**n_r (exact)."""
    if n_r < 0:
        raise ConfigError("The number of candidate terms cannot be negative")
    return 2 ** n_r


def lagged_signal(dataset: Dataset, signal: int, lag: int, start: int) -> np.ndarray:
    """Samples of ``signal`` delayed by ``lag`` for times start..N-1."""
    values = dataset.output if signal == OUTPUT else dataset.inputs[:, signal - 1]
    return values[start - lag:dataset.n_samples - lag]


def term_column(dataset: Dataset, term: RegressorTerm, start: int) -> np.ndarray:
    column = np.ones(dataset.n_samples - start)
    for f in term.factors:
        column = column * lagged_signal(dataset, f.signal, f.lag, start) ** f.exponent
    return column


def check_compatible(dataset: Dataset, dictionary: Dictionary) -> None:
    if dataset.n_inputs < dictionary.config.n_inputs:
        raise DataError(f"The dictionary needs {dictionary.config.n_inputs} input channels, "
                        f"the dataset has {dataset.n_inputs}")
    if dataset.n_samples <= dictionary.max_lag + 1:
        raise DataError(f"{dataset.n_samples} samples are too few for maximum lag "
                        f"{dictionary.max_lag}")


def build_regression_matrix(dataset: Dataset,
                            dictionary: Dictionary,
                            mask: Sequence[bool],
                            start: Optional[int] = None) -> np.ndarray:
    """
    Evaluate the selected terms on measured data.

    Every candidate is evaluated on the window defined by the dictionary's
    global maximum lag so that all candidates share the same target.

    Args:
        dataset: Measured inputs and output
        dictionary: Candidate terms
        mask: Binary inclusion vector over the dictionary
        start: First time index of the window (defaults to the global maximum lag)

    Returns:
        Matrix with N - start rows and one column per selected term
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (len(dictionary),):
        raise ValueError(f"Mask length {mask.size} does not match dictionary size {len(dictionary)}")
    if not mask.any():
        raise EmptyModel("The candidate selects no regressors")
    check_compatible(dataset, dictionary)
    start = dictionary.max_lag if start is None else start
    columns = [term_column(dataset, dictionary[i], start) for i in np.flatnonzero(mask)]
    return np.column_stack(columns)


def target(dataset: Dataset, dictionary: Dictionary, start: Optional[int] = None) -> np.ndarray:
    """Measured output over the evaluation window."""
    start = dictionary.max_lag if start is None else start
    return dataset.output[start:]
