import warnings

import numpy as np
import pytest

from metainf.domain import HardwareProfile, TaskProfile
from metainf.embedding import Embedder, EmbeddingProviderSpec, PromptStyle
from metainf.synth import SynthSpec, SyntheticWorld


@pytest.fixture(scope="session")
def small_world() -> SyntheticWorld:
    """Tiny but complete world for unit tests (32 tasks, full method/hw axes)."""
    return SyntheticWorld(SynthSpec(seed=13, n_train_tasks=32))


@pytest.fixture(scope="session")
def small_store(small_world):
    return small_world.training_store()


@pytest.fixture(scope="session")
def small_tensor(small_store):
    return small_store.assemble_tensor()


@pytest.fixture(scope="session")
def small_embedder(small_store, small_tensor) -> Embedder:
    emb = Embedder(style=PromptStyle.RICH, provider=EmbeddingProviderSpec(raw_dim=96), rank=8)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        emb.fit(
            list(small_store.tasks.values()),
            small_tensor.methods,
            list(small_store.hardware.values()),
        )
    return emb


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


def make_task(i: int = 0, batch: int = 16, **kwargs) -> TaskProfile:
    defaults = dict(
        id=f"t{i:03d}",
        description=f"Workload number {i} for unit tests.",
        batch_size=batch,
        prompt_count=100 + i,
        source_tag="unit",
    )
    defaults.update(kwargs)
    return TaskProfile(**defaults)


def make_hardware(i: int = 0, **kwargs) -> HardwareProfile:
    defaults = dict(
        id=f"hw{i:02d}",
        gpu_class="l4",
        gpu_count=4,
        memory_gb=24.0,
        price_per_hour=3.2,
        description="test hardware",
    )
    defaults.update(kwargs)
    return HardwareProfile(**defaults)
