from .analysis import ChangePointAnalysis
from .changepoint_config import ConfigError, RunConfig
from .detect import ChangePointSet, Interval, SingleResult
from .limitdist import QuantileTable
from .metric import DataError, DataMatrix, DistanceMatrix, GroupingScheme
from .simgen import LabeledDataset
from .two_sample import TwoSampleResult

__all__ = [
    "ChangePointAnalysis",
    "ChangePointSet",
    "ConfigError",
    "DataError",
    "DataMatrix",
    "DistanceMatrix",
    "GroupingScheme",
    "Interval",
    "LabeledDataset",
    "QuantileTable",
    "RunConfig",
    "SingleResult",
    "TwoSampleResult"
]
