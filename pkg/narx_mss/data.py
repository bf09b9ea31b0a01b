"""
Input/output datasets and CSV ingestion.
"""
import logging
import os
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas as pd

from .exceptions import DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dataset:
    """
    Aligned input channels and output sequence.

    Attributes:
        inputs: (N, r) array, one column per input channel
        output: (N,) array of real samples or {0, 1} labels
    """
    inputs: np.ndarray
    output: np.ndarray

    def __post_init__(self):
        output = np.array(self.output, dtype=float).ravel()
        inputs = np.array(self.inputs, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs.reshape(-1, 1)
        if inputs.size == 0:
            inputs = np.empty((output.size, 0))
        if inputs.shape[0] != output.size:
            raise DataError(f"Input channels have {inputs.shape[0]} samples, "
                            f"output has {output.size}")
        inputs.setflags(write=False)
        output.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "output", output)

    @property
    def n_samples(self) -> int:
        return self.output.size

    @property
    def n_inputs(self) -> int:
        return self.inputs.shape[1]

    def split(self, fraction: float) -> Tuple["Dataset", "Dataset"]:
        """
        Split in time order into a leading training part and a trailing test part.

        Args:
            fraction: Share of samples assigned to the training part, in (0, 1)

        Returns:
            (train, test) datasets
        """
        if not 0.0 < fraction < 1.0:
            raise DataError(f"Split fraction must lie in (0, 1), got {fraction}")
        cut = int(round(self.n_samples * fraction))
        return (Dataset(self.inputs[:cut], self.output[:cut]),
                Dataset(self.inputs[cut:], self.output[cut:]))


def load_csv(path: str, standardize: bool = False) -> Dataset:
    """
    Load a dataset with header ``u1,...,ur,y``.

    Missing cells are replaced by the mean of the present values of their
    column. With ``standardize`` every input column is centered and scaled to
    unit variance; the output column is left untouched so labels stay binary.

    Args:
        path: CSV file path
        standardize: Whether to scale and center the input columns

    Returns:
        Dataset with the last column as output
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"No such data file: {path}")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"Cannot parse {path}: {e}") from e

    if "y" not in frame.columns:
        raise DataError(f"{path} has no 'y' column")
    input_columns = [c for c in frame.columns if c != "y"]
    try:
        frame = frame.apply(pd.to_numeric, errors="raise")
    except ValueError as e:
        raise DataError(f"Non-numeric value in {path}: {e}") from e

    if frame.isna().all().any():
        empty = frame.columns[frame.isna().all()].tolist()
        raise DataError(f"Columns without any value in {path}: {empty}")
    n_missing = int(frame.isna().sum().sum())
    if n_missing:
        logger.info("Replacing %d missing cells by column means", n_missing)
        frame = frame.fillna(frame.mean())

    inputs = frame[input_columns].to_numpy(dtype=float)
    if standardize and inputs.size:
        std = inputs.std(axis=0)
        std[std == 0] = 1.0
        inputs = (inputs - inputs.mean(axis=0)) / std
    return Dataset(inputs, frame["y"].to_numpy(dtype=float))


def save_csv(dataset: Dataset, path: str) -> None:
    """Write a dataset using the ``u1,...,ur,y`` schema."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    columns = {f"u{i + 1}": dataset.inputs[:, i] for i in range(dataset.n_inputs)}
    columns["y"] = dataset.output
    pd.DataFrame(columns).to_csv(path, index=False, float_format="%.17g")
