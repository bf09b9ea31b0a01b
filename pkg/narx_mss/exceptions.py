"""
Exceptions raised by the structure selection toolkit.
"""


class NarxMssError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(NarxMssError, ValueError):
    """A configuration value is out of its valid range."""


class DataError(NarxMssError, ValueError):
    """The data cannot be used for identification."""


class InvalidLabels(DataError):
    """Classification labels are not all in {0, 1}."""


class DegenerateClasses(DataError):
    """Only one class is present where both are required."""


class DegenerateTarget(DataError):
    """The target sequence is constant over the evaluation window."""


class NumericalError(NarxMssError, ArithmeticError):
    """A numerical procedure could not produce a usable result."""


class SingularModel(NumericalError):
    """The regression matrix is rank deficient."""


class Diverged(NumericalError):
    """A free-run simulation produced non-finite or exploding values."""


class SearchAborted(NumericalError):
    """Every agent stayed empty after the maximum number of regenerations."""


class EmptyModel(NarxMssError):
    """A candidate has no regressors left.

    This is a control signal for the search: the offending agent gets a fresh
    random position instead of a fitness value.
    """
