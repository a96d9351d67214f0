"""Core value types shared by every module.

All types are immutable dataclasses validated on construction; they are safe
to share across threads and to hand to concurrent selection calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class TaskProfile:
    """A workload to be served: free-text description plus numeric shape."""

    id: str
    description: str
    batch_size: int
    prompt_count: int = 1
    source_tag: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("task id must be non-empty")
        if not self.description:
            raise ValueError("task description must be non-empty")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.prompt_count < 1:
            raise ValueError(f"prompt_count must be >= 1, got {self.prompt_count}")


@dataclass(frozen=True)
class MethodConfig:
    """One acceleration-method combination: three boolean serving flags."""

    prefix_caching: bool = False
    chunked_prefill: bool = False
    continuous_batching: bool = False

    @property
    def flags(self) -> tuple[bool, bool, bool]:
        return (self.prefix_caching, self.chunked_prefill, self.continuous_batching)


def method_index(config: MethodConfig) -> int:
    """Bijective encoding of the 8 flag combinations into [0, 7]."""
    return (
        (4 if config.prefix_caching else 0)
        + (2 if config.chunked_prefill else 0)
        + (1 if config.continuous_batching else 0)
    )


def method_from_index(idx: int) -> MethodConfig:
    if not 0 <= idx <= 7:
        raise ValueError(f"method index out of range: {idx}")
    return MethodConfig(bool(idx & 4), bool(idx & 2), bool(idx & 1))


ALL_METHODS: tuple[MethodConfig, ...] = tuple(method_from_index(i) for i in range(8))

# The five combinations with conventional names; the other three are reachable
# but unnamed.
METHOD_NONE = MethodConfig(False, False, False)
METHOD_CHUNKED_PREFILL = MethodConfig(False, True, False)
METHOD_CONTINUOUS_BATCHING = MethodConfig(False, False, True)
METHOD_PREFIX_CACHING = MethodConfig(True, False, False)
METHOD_ALL = MethodConfig(True, True, True)

NAMED_METHODS = {
    "none": METHOD_NONE,
    "chunked_prefill": METHOD_CHUNKED_PREFILL,
    "continuous_batching": METHOD_CONTINUOUS_BATCHING,
    "prefix_caching": METHOD_PREFIX_CACHING,
    "all": METHOD_ALL,
}

_FLAG_LABELS = ("Prefix Caching", "Chunked Prefill", "Continuous Batching")


def method_name(config: MethodConfig) -> str:
    """Human name: the five conventional ones, '+'-joined flags otherwise."""
    if config == METHOD_NONE:
        return "None"
    if config == METHOD_ALL:
        return "All"
    parts = [label for label, on in zip(_FLAG_LABELS, config.flags) if on]
    return " + ".join(parts)


@dataclass(frozen=True)
class HardwareProfile:
    """A hardware environment selection runs against."""

    id: str
    gpu_class: str
    gpu_count: int
    memory_gb: float
    price_per_hour: float
    description: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("hardware id must be non-empty")
        if self.gpu_count < 1:
            raise ValueError(f"gpu_count must be >= 1, got {self.gpu_count}")
        if self.memory_gb <= 0:
            raise ValueError(f"memory_gb must be positive, got {self.memory_gb}")
        if self.price_per_hour < 0:
            raise ValueError(f"price_per_hour must be >= 0, got {self.price_per_hour}")


@dataclass(frozen=True)
class PerformanceRecord:
    """One measured runtime of (task, method, hardware)."""

    task: str
    method: MethodConfig
    hardware: str
    runtime_s: float
    runtime_std_s: Optional[float] = None
    metric_name: str = "runtime"

    def __post_init__(self) -> None:
        if not self.task or not self.hardware:
            raise ValueError("record task/hardware ids must be non-empty")
        if not math.isfinite(self.runtime_s) or self.runtime_s <= 0:
            raise ValueError(f"runtime_s must be positive, got {self.runtime_s}")
        if self.runtime_std_s is not None and self.runtime_std_s < 0:
            raise ValueError(f"runtime_std_s must be >= 0, got {self.runtime_std_s}")
        if self.metric_name != "runtime":
            raise ValueError(f"unsupported metric: {self.metric_name}")

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.task, method_index(self.method), self.hardware)


class PerformanceTensor:
    """Dense n x m x h runtime array with NaN marking missing cells.

    Axis order is fixed: tasks sorted lexicographically, methods sorted by
    method_index, hardware sorted lexicographically.
    """

    def __init__(
        self,
        tasks: Sequence[str],
        methods: Sequence[MethodConfig],
        hardware: Sequence[str],
        values: np.ndarray,
    ) -> None:
        self.tasks = list(tasks)
        self.methods = list(methods)
        self.hardware = list(hardware)
        values = np.asarray(values, dtype=np.float64)
        expected = (len(self.tasks), len(self.methods), len(self.hardware))
        if values.shape != expected:
            raise ValueError(f"tensor shape {values.shape} != axes {expected}")
        present = values[~np.isnan(values)]
        if present.size and not (present > 0).all():
            raise ValueError("present tensor values must be positive")
        self.values = values
        self._task_pos = {t: i for i, t in enumerate(self.tasks)}
        self._method_pos = {method_index(m): j for j, m in enumerate(self.methods)}
        self._hw_pos = {h: k for k, h in enumerate(self.hardware)}

    @property
    def shape(self) -> tuple[int, int, int]:
        return (len(self.tasks), len(self.methods), len(self.hardware))

    @property
    def is_complete(self) -> bool:
        return not np.isnan(self.values).any()

    def value_at(self, task: str, method: MethodConfig, hardware: str) -> float:
        v = self.values[
            self._task_pos[task],
            self._method_pos[method_index(method)],
            self._hw_pos[hardware],
        ]
        if np.isnan(v):
            raise DataError(f"missing tensor cell ({task}, {method_index(method)}, {hardware})")
        return float(v)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PerformanceTensor):
            return NotImplemented
        return (
            self.tasks == other.tasks
            and self.methods == other.methods
            and self.hardware == other.hardware
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


@dataclass(frozen=True)
class EmbeddingVector:
    """Dense real vector plus provenance bookkeeping."""

    values: np.ndarray
    dim: int
    provenance: str = "fallback"  # "provider" | "fallback"
    entity_kind: str = "data"  # "data" | "model" | "hardware"

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 1 or arr.shape[0] != self.dim:
            raise ValueError(f"embedding has {arr.shape} entries, declared dim {self.dim}")
        if not np.isfinite(arr).all():
            raise ValueError("embedding entries must be finite")
        if self.provenance not in ("provider", "fallback"):
            raise ValueError(f"unknown provenance: {self.provenance}")
        if self.entity_kind not in ("data", "model", "hardware"):
            raise ValueError(f"unknown entity kind: {self.entity_kind}")


@dataclass(frozen=True)
class Budget:
    limit: float

    def __post_init__(self) -> None:
        if self.limit < 0:
            raise ValueError(f"budget limit must be >= 0, got {self.limit}")


@dataclass(frozen=True)
class CostEstimate:
    amount: float
    runtime_source: str = "predicted"  # "predicted" | "measured"

    def __post_init__(self) -> None:
        if self.amount < 0:
            raise ValueError(f"cost amount must be >= 0, got {self.amount}")
        if self.runtime_source not in ("predicted", "measured"):
            raise ValueError(f"unknown runtime source: {self.runtime_source}")


@dataclass(frozen=True)
class SelectionResult:
    method: MethodConfig
    predicted_runtime_s: float
    cost: CostEstimate
    feasible_set_size: int
    ranking: tuple[tuple[MethodConfig, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.predicted_runtime_s <= 0:
            raise ValueError("predicted runtime must be positive")
        if self.feasible_set_size < 0:
            raise ValueError("feasible set size must be >= 0")
        if all(m != self.method for m, _ in self.ranking):
            raise ValueError("selected method missing from ranking")
