"""Entity embeddings: prompt rendering, raw embedding providers, truncated SVD.

Three prompt styles render text that an embedding provider turns into raw
vectors; a per-entity-kind truncated SVD compresses them. The one_hot style
bypasses text entirely and yields indicator vectors over a fitted universe.

The fallback provider is a pure function of (text, raw_dim): it seeds a
counter-based generator (Philox) from a cryptographic hash and draws a
unit-normalized standard-normal vector, so results are identical across
processes and platforms.
"""

from __future__ import annotations

import dataclasses
import hashlib
import os
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import requests

from .domain import (
    EmbeddingVector,
    HardwareProfile,
    MethodConfig,
    TaskProfile,
    method_index,
    method_name,
)
from .errors import ProviderError, UnknownEntityError

ENDPOINT_ENV_VAR = "METAINF_EMBED_ENDPOINT"
DEFAULT_RAW_DIM = 384


class PromptStyle(str, Enum):
    ONE_HOT = "one_hot"
    BASIC = "basic"
    RICH = "rich"
    COT = "cot"


@dataclass(frozen=True)
class EmbeddingProviderSpec:
    kind: str = "fallback"  # "http" | "fallback"
    endpoint: Optional[str] = None
    model_name: str = "fallback-hash"
    timeout_s: float = 10.0
    raw_dim: int = DEFAULT_RAW_DIM

    def __post_init__(self) -> None:
        if self.kind not in ("http", "fallback"):
            raise ValueError(f"unknown provider kind: {self.kind}")
        if self.kind == "http" and not (self.endpoint or os.environ.get(ENDPOINT_ENV_VAR)):
            raise ValueError("http provider requires an endpoint")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.raw_dim < 1:
            raise ValueError("raw_dim must be >= 1")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "endpoint": self.endpoint,
            "model_name": self.model_name,
            "timeout_s": self.timeout_s,
            "raw_dim": self.raw_dim,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "EmbeddingProviderSpec":
        return cls(
            kind=obj.get("kind", "fallback"),
            endpoint=obj.get("endpoint"),
            model_name=obj.get("model_name", "fallback-hash"),
            timeout_s=float(obj.get("timeout_s", 10.0)),
            raw_dim=int(obj.get("raw_dim", DEFAULT_RAW_DIM)),
        )


# Fixed reasoning scaffolds appended by the cot style (versioned constants so
# the ablation is deterministic).
TASK_COT_SCAFFOLD = (
    "Reasoning: larger batches amortize prefill work but raise memory pressure; "
    "a longer prompt list extends total runtime; repeated prefixes reward cache reuse."
)
METHOD_COT_SCAFFOLD = (
    "Reasoning: prefix caching trades memory for skipped prefill compute, chunked "
    "prefill bounds peak memory at some scheduling cost, and continuous batching "
    "lifts utilization most under uneven request arrival; stacking methods can "
    "interfere at large batch sizes."
)
HARDWARE_COT_SCAFFOLD = (
    "Reasoning: the device class sets raw throughput, per-device memory bounds "
    "cache capacity, and extra GPUs help with diminishing returns as "
    "synchronization overhead grows."
)


def _flag_word(on: bool) -> str:
    return "enabled" if on else "disabled"


def render_prompt(entity, style: PromptStyle | str) -> str:
    """Deterministic text for an entity under basic/rich/cot styles."""
    style = PromptStyle(style)
    if style is PromptStyle.ONE_HOT:
        raise ValueError("one_hot style bypasses text rendering")
    if isinstance(entity, TaskProfile):
        return _render_task(entity, style)
    if isinstance(entity, MethodConfig):
        return _render_method(entity, style)
    if isinstance(entity, HardwareProfile):
        return _render_hardware(entity, style)
    raise TypeError(f"cannot render prompt for {type(entity).__name__}")


def _render_task(t: TaskProfile, style: PromptStyle) -> str:
    if style is PromptStyle.BASIC:
        return f"Task: {t.id}"
    text = (
        f"Inference workload {t.id} drawn from {t.source_tag or 'an unspecified corpus'}. "
        f"{t.description} It serves {t.prompt_count:,} prompts at batch size {t.batch_size:,}."
    )
    if style is PromptStyle.COT:
        text = f"{text} {TASK_COT_SCAFFOLD}"
    return text


def _render_method(m: MethodConfig, style: PromptStyle) -> str:
    if style is PromptStyle.BASIC:
        return f"Method: {method_name(m)}"
    text = (
        f"Acceleration configuration {method_name(m)}. "
        f"Prefix caching {_flag_word(m.prefix_caching)}: reuses key-value attention "
        f"state across shared prompt prefixes. "
        f"Chunked prefill {_flag_word(m.chunked_prefill)}: splits prompt processing "
        f"into bounded segments. "
        f"Continuous batching {_flag_word(m.continuous_batching)}: merges in-flight "
        f"requests into dynamic GPU batches."
    )
    if style is PromptStyle.COT:
        text = f"{text} {METHOD_COT_SCAFFOLD}"
    return text


def _render_hardware(h: HardwareProfile, style: PromptStyle) -> str:
    if style is PromptStyle.BASIC:
        return f"Hardware: {h.gpu_class}"
    text = (
        f"Hardware environment {h.id}: {h.gpu_count}x {h.gpu_class} GPUs with "
        f"{h.memory_gb:g} GB memory each, billed at {h.price_per_hour:g} per hour."
    )
    if h.description:
        text = f"{text} {h.description}"
    if style is PromptStyle.COT:
        text = f"{text} {HARDWARE_COT_SCAFFOLD}"
    return text


def _fallback_values(text: str, raw_dim: int) -> np.ndarray:
    digest = hashlib.sha256(f"{raw_dim}:{text}".encode("utf-8")).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    values = gen.standard_normal(raw_dim)
    norm = float(np.linalg.norm(values))
    if norm == 0.0:  # pragma: no cover - essentially impossible
        values[0] = 1.0
        norm = 1.0
    return values / norm


def _http_values(text: str, spec: EmbeddingProviderSpec) -> np.ndarray:
    endpoint = os.environ.get(ENDPOINT_ENV_VAR) or spec.endpoint
    try:
        resp = requests.post(
            endpoint,
            json={"model": spec.model_name, "input": [text]},
            timeout=spec.timeout_s,
        )
    except requests.Timeout as exc:
        raise ProviderError(f"embedding request timed out after {spec.timeout_s}s") from exc
    except requests.RequestException as exc:
        raise ProviderError(f"embedding request failed: {exc}") from exc
    if not 200 <= resp.status_code < 300:
        raise ProviderError(
            f"embedding provider returned status {resp.status_code}", status=resp.status_code
        )
    try:
        values = np.asarray(resp.json()["data"][0]["embedding"], dtype=np.float64)
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ProviderError(f"malformed provider response: {exc}") from exc
    if values.ndim != 1 or values.shape[0] != spec.raw_dim:
        raise ProviderError(
            f"provider returned {values.shape[0] if values.ndim == 1 else values.shape} "
            f"values, expected raw_dim={spec.raw_dim}"
        )
    if not np.isfinite(values).all():
        raise ProviderError("provider returned non-finite values")
    return values


def embed(text: str, provider: EmbeddingProviderSpec, entity_kind: str = "data") -> EmbeddingVector:
    """Raw (pre-SVD) embedding of a text under the given provider."""
    if not text:
        raise ValueError("cannot embed empty text")
    if provider.kind == "fallback":
        values = _fallback_values(text, provider.raw_dim)
        provenance = "fallback"
    else:
        values = _http_values(text, provider)
        provenance = "provider"
    return EmbeddingVector(values, provider.raw_dim, provenance, entity_kind)


def one_hot(entity_id: str, universe: Sequence[str], entity_kind: str = "data") -> EmbeddingVector:
    """Indicator vector of entity_id within an ordered universe."""
    try:
        pos = list(universe).index(entity_id)
    except ValueError:
        raise UnknownEntityError(
            f"id {entity_id!r} not in the fitted one-hot universe ({len(universe)} entries)"
        ) from None
    values = np.zeros(len(universe))
    values[pos] = 1.0
    return EmbeddingVector(values, len(universe), "fallback", entity_kind)


@dataclass
class SvdModel:
    """Truncated SVD of mean-centered raw embeddings."""

    rank: int
    right_factors: np.ndarray  # (raw_dim, k), orthonormal columns
    singular_values: np.ndarray  # (k,), non-increasing
    mean_vector: np.ndarray  # (raw_dim,)

    @property
    def raw_dim(self) -> int:
        return self.right_factors.shape[0]

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "right_factors": self.right_factors.tolist(),
            "singular_values": self.singular_values.tolist(),
            "mean_vector": self.mean_vector.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "SvdModel":
        return cls(
            rank=int(obj["rank"]),
            right_factors=np.asarray(obj["right_factors"], dtype=np.float64),
            singular_values=np.asarray(obj["singular_values"], dtype=np.float64),
            mean_vector=np.asarray(obj["mean_vector"], dtype=np.float64),
        )


def _as_matrix(raw_vectors) -> np.ndarray:
    if isinstance(raw_vectors, np.ndarray):
        return np.asarray(raw_vectors, dtype=np.float64)
    rows = [v.values if isinstance(v, EmbeddingVector) else np.asarray(v) for v in raw_vectors]
    return np.asarray(rows, dtype=np.float64)


def fit_svd(raw_vectors, k: int) -> SvdModel:
    """Fit a rank-k truncated SVD on centered rows.

    k is clamped (with a warning) when it exceeds min(count, raw_dim) so that
    tiny universes still fit at the configured rank.
    """
    matrix = _as_matrix(raw_vectors)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise ValueError("fit_svd needs at least 2 vectors of equal dimension")
    n, raw_dim = matrix.shape
    if k < 1:
        raise ValueError(f"rank must be >= 1, got {k}")
    max_k = min(n, raw_dim)
    if k > max_k:
        warnings.warn(
            f"requested rank {k} exceeds min(count={n}, raw_dim={raw_dim}); clamping to {max_k}",
            stacklevel=2,
        )
        k = max_k
    mean = matrix.mean(axis=0)
    centered = matrix - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    vt = vt[:k]
    # canonical sign: make each component's largest-|entry| positive
    for row in vt:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            row *= -1.0
    return SvdModel(
        rank=k,
        right_factors=np.ascontiguousarray(vt.T),
        singular_values=s[:k].copy(),
        mean_vector=mean,
    )


def reduce(model: SvdModel, raw: EmbeddingVector | np.ndarray) -> EmbeddingVector:
    """Project a raw vector onto the fitted components (centered)."""
    if isinstance(raw, EmbeddingVector):
        values, provenance, kind = raw.values, raw.provenance, raw.entity_kind
    else:
        values, provenance, kind = np.asarray(raw, dtype=np.float64), "fallback", "data"
    if values.shape[0] != model.raw_dim:
        raise ValueError(f"vector dim {values.shape[0]} != model raw_dim {model.raw_dim}")
    projected = (values - model.mean_vector) @ model.right_factors
    return EmbeddingVector(projected, model.rank, provenance, kind)


_KINDS = ("data", "model", "hardware")


def _scoring_hardware(h: HardwareProfile) -> HardwareProfile:
    # Price must not leak into scoring features: embeddings use a price-blind
    # view so cost rates only affect budget filtering.
    return dataclasses.replace(h, price_per_hour=0.0)


@dataclass
class Embedder:
    """Per-kind embedding pipeline fitted on the training catalogs.

    For text styles, fit() embeds every catalog entity, fits one SVD per kind,
    and caches the reduced vectors; unseen entities are embedded on demand
    (provider calls cached by text). For one_hot, fit() freezes the universes
    and unseen ids raise UnknownEntityError.
    """

    style: PromptStyle
    provider: EmbeddingProviderSpec = field(default_factory=EmbeddingProviderSpec)
    rank: int = 64

    def __post_init__(self) -> None:
        self.style = PromptStyle(self.style)
        self._svd: dict[str, SvdModel] = {}
        self._universe: dict[str, list[str]] = {}
        self._raw_cache: dict[str, np.ndarray] = {}
        self._fitted = False

    def fit(
        self,
        tasks: Sequence[TaskProfile],
        methods: Sequence[MethodConfig],
        hardware: Sequence[HardwareProfile],
    ) -> "Embedder":
        tasks = sorted(tasks, key=lambda t: t.id)
        methods = sorted(methods, key=method_index)
        hardware = sorted(hardware, key=lambda h: h.id)
        if self.style is PromptStyle.ONE_HOT:
            self._universe = {
                "data": [t.id for t in tasks],
                "model": [str(method_index(m)) for m in methods],
                "hardware": [h.id for h in hardware],
            }
        else:
            for kind, entities in (
                ("data", tasks),
                ("model", methods),
                ("hardware", [_scoring_hardware(h) for h in hardware]),
            ):
                raws = [self._raw(render_prompt(e, self.style), kind) for e in entities]
                if len(raws) == 1:
                    # singleton universe: the kind carries no discriminative
                    # signal; a duplicated row yields the degenerate (zero) fit
                    raws = raws * 2
                self._svd[kind] = fit_svd(raws, self.rank)
        self._fitted = True
        return self

    def _raw(self, text: str, kind: str) -> np.ndarray:
        cache_key = hashlib.sha256(text.encode("utf-8")).hexdigest()
        cached = self._raw_cache.get(cache_key)
        if cached is None:
            cached = embed(text, self.provider, kind).values
            self._raw_cache[cache_key] = cached
        return cached

    def _require_fit(self) -> None:
        if not self._fitted:
            raise RuntimeError("Embedder.fit() must run before producing vectors")

    def _text_vector(self, entity, kind: str) -> np.ndarray:
        text = render_prompt(entity, self.style)
        return reduce(self._svd[kind], self._raw(text, kind)).values

    def data_vector(self, task: TaskProfile) -> np.ndarray:
        self._require_fit()
        if self.style is PromptStyle.ONE_HOT:
            return one_hot(task.id, self._universe["data"], "data").values
        return self._text_vector(task, "data")

    def method_vector(self, method: MethodConfig) -> np.ndarray:
        self._require_fit()
        if self.style is PromptStyle.ONE_HOT:
            return one_hot(str(method_index(method)), self._universe["model"], "model").values
        return self._text_vector(method, "model")

    def hardware_vector(self, hw: HardwareProfile) -> np.ndarray:
        self._require_fit()
        if self.style is PromptStyle.ONE_HOT:
            return one_hot(hw.id, self._universe["hardware"], "hardware").values
        return self._text_vector(_scoring_hardware(hw), "hardware")

    @property
    def dims(self) -> dict[str, int]:
        self._require_fit()
        if self.style is PromptStyle.ONE_HOT:
            return {k: len(self._universe[k]) for k in _KINDS}
        return {k: self._svd[k].rank for k in _KINDS}

    def to_dict(self) -> dict:
        self._require_fit()
        return {
            "style": self.style.value,
            "rank": self.rank,
            "provider": self.provider.to_dict(),
            "svd": {k: m.to_dict() for k, m in self._svd.items()},
            "universe": self._universe,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Embedder":
        emb = cls(
            style=PromptStyle(obj["style"]),
            provider=EmbeddingProviderSpec.from_dict(obj["provider"]),
            rank=int(obj["rank"]),
        )
        emb._svd = {k: SvdModel.from_dict(m) for k, m in obj.get("svd", {}).items()}
        emb._universe = {k: list(v) for k, v in obj.get("universe", {}).items()}
        emb._fitted = True
        return emb
