"""Application configuration: TOML file plus METAINF_* environment overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - version-dependent
    import tomli as tomllib

from .embedding import EmbeddingProviderSpec, PromptStyle
from .errors import DataError

ENV_PREFIX = "METAINF_"


@dataclass
class AppConfig:
    record_store_path: str = "records.json"
    model_store_path: str = "model.json"
    provider: EmbeddingProviderSpec = field(default_factory=EmbeddingProviderSpec)
    default_style: PromptStyle = PromptStyle.RICH
    default_rank: int = 64
    default_selector: str = "metainf"
    bind_host: str = "127.0.0.1"
    bind_port: int = 8080
    request_timeout_s: float = 30.0
    default_budget: Optional[float] = None

    def __post_init__(self) -> None:
        if self.default_rank < 1:
            raise DataError("default_rank must be >= 1")
        if self.request_timeout_s <= 0:
            raise DataError("request_timeout_s must be positive")
        if self.default_budget is not None and self.default_budget < 0:
            raise DataError("default_budget must be >= 0")


def _apply_env(cfg: AppConfig) -> AppConfig:
    env = os.environ
    if v := env.get(ENV_PREFIX + "RECORD_STORE"):
        cfg.record_store_path = v
    if v := env.get(ENV_PREFIX + "MODEL_STORE"):
        cfg.model_store_path = v
    if v := env.get(ENV_PREFIX + "STYLE"):
        cfg.default_style = PromptStyle(v)
    if v := env.get(ENV_PREFIX + "RANK"):
        cfg.default_rank = int(v)
    if v := env.get(ENV_PREFIX + "SELECTOR"):
        cfg.default_selector = v
    if v := env.get(ENV_PREFIX + "BIND"):
        host, _, port = v.partition(":")
        cfg.bind_host = host or cfg.bind_host
        if port:
            cfg.bind_port = int(port)
    if v := env.get(ENV_PREFIX + "TIMEOUT_S"):
        cfg.request_timeout_s = float(v)
    if v := env.get(ENV_PREFIX + "BUDGET"):
        cfg.default_budget = None if v.lower() == "none" else float(v)
    if v := env.get(ENV_PREFIX + "EMBED_ENDPOINT"):
        cfg.provider = EmbeddingProviderSpec(
            kind="http",
            endpoint=v,
            model_name=cfg.provider.model_name,
            timeout_s=cfg.provider.timeout_s,
            raw_dim=cfg.provider.raw_dim,
        )
    return cfg


def load_config(path: Optional[str | Path] = None) -> AppConfig:
    """Read TOML config (all keys optional) and apply environment overrides."""
    cfg = AppConfig()
    if path is not None:
        try:
            data = tomllib.loads(Path(path).read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise DataError(f"cannot read config {path}: {exc}") from exc
        provider_data = data.get("provider", {})
        if provider_data:
            cfg.provider = EmbeddingProviderSpec(
                kind=provider_data.get("kind", "fallback"),
                endpoint=provider_data.get("endpoint"),
                model_name=provider_data.get("model_name", "fallback-hash"),
                timeout_s=float(provider_data.get("timeout_s", 10.0)),
                raw_dim=int(provider_data.get("raw_dim", 384)),
            )
        if "record_store_path" in data:
            cfg.record_store_path = str(data["record_store_path"])
        if "model_store_path" in data:
            cfg.model_store_path = str(data["model_store_path"])
        if "default_style" in data:
            cfg.default_style = PromptStyle(data["default_style"])
        if "default_rank" in data:
            cfg.default_rank = int(data["default_rank"])
        if "default_selector" in data:
            cfg.default_selector = str(data["default_selector"])
        if "bind_host" in data:
            cfg.bind_host = str(data["bind_host"])
        if "bind_port" in data:
            cfg.bind_port = int(data["bind_port"])
        if "request_timeout_s" in data:
            cfg.request_timeout_s = float(data["request_timeout_s"])
        if "default_budget" in data:
            cfg.default_budget = float(data["default_budget"])
    cfg = _apply_env(cfg)
    cfg.__post_init__()
    return cfg
