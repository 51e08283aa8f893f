"""Discovery of treatment effect patterns in binary observational data.

The pipeline learns the outcome's parents, splits them into an adjustment
set and Y-parent-only variables, builds one pattern per observed parent
configuration and then merges patterns bottom-up while keeping their
treatment-effect signs consistent.
"""

from .dataset import BinaryDataset, CrossTable, DataError, load_csv, write_csv
from .generalise import GeneraliseConfig, run_generalisation
from .patterns import DescriptorValue, Pattern, initialise_patterns
from .pipeline import DiscoveryResult, RunConfig, discover
from .stats import CITestConfig, Sign, SignTestConfig
from .structure import StructureResult, learn_structure

__version__ = "0.1.0"

__all__ = [
    "BinaryDataset",
    "CrossTable",
    "DataError",
    "load_csv",
    "write_csv",
    "GeneraliseConfig",
    "run_generalisation",
    "DescriptorValue",
    "Pattern",
    "initialise_patterns",
    "DiscoveryResult",
    "RunConfig",
    "discover",
    "CITestConfig",
    "Sign",
    "SignTestConfig",
    "StructureResult",
    "learn_structure",
]
