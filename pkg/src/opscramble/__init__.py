"""Coarse-grained operator distributions for studying scrambling in small quantum systems."""
from .errors import CapacityError, ContractViolation
from .operators import OperatorDistribution, TimeSeries, measures, time_average, temporal_fluctuation, weight_distribution
from .pauli import PauliString

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ContractViolation",
    "OperatorDistribution",
    "PauliString",
    "TimeSeries",
    "measures",
    "temporal_fluctuation",
    "time_average",
    "weight_distribution",
    "__version__",
]
