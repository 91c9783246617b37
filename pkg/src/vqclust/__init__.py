"""Variational quantum clustering with non-orthogonal anchor states."""

from .anchors import AnchorSet, make_anchor_set
from .ansatz import CircuitSpec, EncodingSpec
from .backend import MPSBackend, StatevectorBackend, make_backend
from .cost import CostConfig, total_cost
from .data import BlobSpec, Dataset, generate_blobs, load_csv, load_iris, rescale
from .evaluation import assign, matched_accuracy
from .exceptions import ConfigurationError, IngestionError, NumericError, UsageError, VQClustError
from .trainer import OptimizerConfig, TrainReport, train

__version__ = "0.1.0"
