"""metainf: budget-constrained selection of LLM inference acceleration methods.

Predicts each candidate method's runtime for a (task, hardware) context from
learned embeddings and historical performance records, then picks the fastest
method whose estimated cost fits the deployment budget.
"""

from .domain import (
    ALL_METHODS,
    Budget,
    CostEstimate,
    EmbeddingVector,
    HardwareProfile,
    MethodConfig,
    PerformanceRecord,
    PerformanceTensor,
    SelectionResult,
    TaskProfile,
    method_from_index,
    method_index,
    method_name,
)
from .embedding import Embedder, EmbeddingProviderSpec, PromptStyle, embed, fit_svd, one_hot, reduce, render_prompt
from .errors import (
    ConvergenceError,
    DataError,
    InfeasibleError,
    MetaInfError,
    ProviderError,
    UnknownEntityError,
)
from .evaluation import run_ablation, run_protocol
from .gbm import GbmHyperparams, GbmModel, predict_gbm, train_gbm
from .linear import RidgeModel, predict_ridge, train_ridge
from .perfdb import RecordStore
from .selection import SelectionRequest, estimate_cost, select, select_method
from .selectors import FittedSelector, SelectorSpec, fit, load_selector
from .synth import SynthSpec, SyntheticWorld, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "ALL_METHODS",
    "Budget",
    "ConvergenceError",
    "CostEstimate",
    "DataError",
    "Embedder",
    "EmbeddingProviderSpec",
    "EmbeddingVector",
    "FittedSelector",
    "GbmHyperparams",
    "GbmModel",
    "HardwareProfile",
    "InfeasibleError",
    "MetaInfError",
    "MethodConfig",
    "PerformanceRecord",
    "PerformanceTensor",
    "PromptStyle",
    "ProviderError",
    "RecordStore",
    "RidgeModel",
    "SelectionRequest",
    "SelectionResult",
    "SelectorSpec",
    "SynthSpec",
    "SyntheticWorld",
    "TaskProfile",
    "UnknownEntityError",
    "embed",
    "estimate_cost",
    "fit",
    "fit_svd",
    "generate_synthetic",
    "load_selector",
    "method_from_index",
    "method_index",
    "method_name",
    "one_hot",
    "predict_gbm",
    "predict_ridge",
    "reduce",
    "render_prompt",
    "run_ablation",
    "run_protocol",
    "select",
    "select_method",
    "train_gbm",
    "train_ridge",
]
