"""Feature assembly: concatenated entity embeddings plus numeric side features.

Layout is fixed per training run: [data | model | hardware | side], where the
side segment is (batch_size, gpu_count, prefix_caching, chunked_prefill,
continuous_batching) in that order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import HardwareProfile, MethodConfig, TaskProfile
from .embedding import Embedder
from .errors import UnknownEntityError

SIDE_FEATURES = (
    "batch_size",
    "gpu_count",
    "prefix_caching",
    "chunked_prefill",
    "continuous_batching",
)


@dataclass(frozen=True)
class FeatureLayout:
    data_dim: int
    model_dim: int
    hardware_dim: int

    @property
    def side_dim(self) -> int:
        return len(SIDE_FEATURES)

    @property
    def total_dim(self) -> int:
        return self.data_dim + self.model_dim + self.hardware_dim + self.side_dim

    @property
    def side_offset(self) -> int:
        return self.data_dim + self.model_dim + self.hardware_dim

    def to_dict(self) -> dict:
        return {
            "data_dim": self.data_dim,
            "model_dim": self.model_dim,
            "hardware_dim": self.hardware_dim,
            "side_features": list(SIDE_FEATURES),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FeatureLayout":
        return cls(
            data_dim=int(obj["data_dim"]),
            model_dim=int(obj["model_dim"]),
            hardware_dim=int(obj["hardware_dim"]),
        )


def layout_for(embedder: Embedder) -> FeatureLayout:
    dims = embedder.dims
    return FeatureLayout(dims["data"], dims["model"], dims["hardware"])


def side_features(task: TaskProfile, method: MethodConfig, hardware: HardwareProfile) -> np.ndarray:
    return np.array(
        [
            float(task.batch_size),
            float(hardware.gpu_count),
            1.0 if method.prefix_caching else 0.0,
            1.0 if method.chunked_prefill else 0.0,
            1.0 if method.continuous_batching else 0.0,
        ]
    )


def build_features(
    task: TaskProfile,
    method: MethodConfig,
    hardware: HardwareProfile,
    embedder: Embedder,
) -> np.ndarray:
    """One feature vector per (task, method, hardware) context."""
    try:
        data_vec = embedder.data_vector(task)
    except UnknownEntityError as exc:
        raise UnknownEntityError(f"task {task.id!r}: {exc}") from exc
    try:
        model_vec = embedder.method_vector(method)
    except UnknownEntityError as exc:
        raise UnknownEntityError(f"method {method!r}: {exc}") from exc
    try:
        hw_vec = embedder.hardware_vector(hardware)
    except UnknownEntityError as exc:
        raise UnknownEntityError(f"hardware {hardware.id!r}: {exc}") from exc
    return np.concatenate([data_vec, model_vec, hw_vec, side_features(task, method, hardware)])
