"""HTTP selection service with atomic model snapshot swaps.

Endpoints (JSON over HTTP/1.1, schema versioned by a top-level "v"):
  GET  /v1/health   liveness plus the current model version
  POST /v1/select   budget-constrained selection against the live snapshot
  POST /v1/records  JSONL record ingestion into the backing store
  POST /v1/train    retrain and atomically swap the snapshot

Selections are computed entirely against one immutable snapshot; its version
id is echoed in every response. Training jobs are serialized by a lock.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .config import AppConfig
from .domain import Budget, HardwareProfile, TaskProfile, method_index
from .embedding import PromptStyle
from .errors import DataError, InfeasibleError, MetaInfError
from .evaluation import fit_selectors
from .perfdb import RecordStore
from .selection import select_method
from .selectors import FittedSelector, selector_from_dict

WIRE_VERSION = 1


@dataclass
class Snapshot:
    selector: FittedSelector
    version: str
    train_rows: int


def snapshot_version(selector: FittedSelector) -> str:
    payload = json.dumps(selector.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:12]


class WireTask(BaseModel):
    description: str
    batch_size: int = Field(ge=1)
    prompt_count: int = Field(default=1, ge=1)


class WireHardware(BaseModel):
    gpu_class: str
    gpu_count: int = Field(ge=1)
    price_per_hour: float = Field(ge=0)
    memory_gb: Optional[float] = None


class SelectBody(BaseModel):
    v: int = WIRE_VERSION
    task: WireTask
    model: str = ""
    hardware: WireHardware
    budget: Optional[float] = None


class TrainBody(BaseModel):
    v: int = WIRE_VERSION
    selector: str = "metainf"
    style: str = "rich"
    rank: int = Field(default=64, ge=1)


def task_from_wire(body: SelectBody) -> TaskProfile:
    digest = hashlib.sha256(body.task.description.encode("utf-8")).hexdigest()[:10]
    return TaskProfile(
        id=f"req-{digest}",
        description=body.task.description,
        batch_size=body.task.batch_size,
        prompt_count=body.task.prompt_count,
        source_tag=body.model,
    )


def hardware_from_wire(body: SelectBody, store: RecordStore) -> HardwareProfile:
    """Reuse a catalog profile when class and count match; price comes from
    the request either way (scoring is price-blind, cost is not)."""
    wire = body.hardware
    for profile in store.hardware.values():
        if profile.gpu_class == wire.gpu_class and profile.gpu_count == wire.gpu_count:
            return HardwareProfile(
                id=profile.id,
                gpu_class=profile.gpu_class,
                gpu_count=profile.gpu_count,
                memory_gb=wire.memory_gb or profile.memory_gb,
                price_per_hour=wire.price_per_hour,
                description=profile.description,
            )
    return HardwareProfile(
        id=f"{wire.gpu_class}x{wire.gpu_count}",
        gpu_class=wire.gpu_class,
        gpu_count=wire.gpu_count,
        memory_gb=wire.memory_gb or 1.0,
        price_per_hour=wire.price_per_hour,
    )


class ServiceState:
    def __init__(self, config: AppConfig):
        self.config = config
        self.snapshot: Optional[Snapshot] = None
        self.store = RecordStore()
        self.train_lock = threading.Lock()

    def load(self) -> None:
        store_path = Path(self.config.record_store_path)
        if store_path.exists():
            self.store = RecordStore.load(store_path)
        model_path = Path(self.config.model_store_path)
        if model_path.exists():
            selector = selector_from_dict(json.loads(model_path.read_text()))
            self.snapshot = Snapshot(
                selector=selector,
                version=snapshot_version(selector),
                train_rows=len(self.store),
            )

    def train(self, kind: str, style: str, rank: int) -> Snapshot:
        with self.train_lock:
            fitted = fit_selectors(
                self.store,
                kinds=[kind],
                style=PromptStyle(style),
                rank=rank,
                provider=self.config.provider,
            )
            selector = fitted[kind]
            snapshot = Snapshot(
                selector=selector,
                version=snapshot_version(selector),
                train_rows=len(self.store),
            )
            self.snapshot = snapshot  # atomic swap; in-flight reads keep the old one
            return snapshot


def create_app(config: AppConfig, state: Optional[ServiceState] = None) -> FastAPI:
    app = FastAPI(title="metainf", version="0.1.0")
    if state is None:
        state = ServiceState(config)
        state.load()
    app.state.service = state

    @app.exception_handler(MetaInfError)
    async def _domain_error(_req: Request, exc: MetaInfError) -> JSONResponse:
        status = 422 if isinstance(exc, InfeasibleError) else 400
        body = {"v": WIRE_VERSION, "error": str(exc)}
        if isinstance(exc, InfeasibleError):
            body["cheapest_cost"] = exc.cheapest_cost
        return JSONResponse(status_code=status, content=body)

    @app.get("/v1/health")
    async def health() -> dict:
        snap = state.snapshot
        return {
            "status": "ok",
            "model_version": snap.version if snap else None,
        }

    @app.post("/v1/select")
    async def select_endpoint(body: SelectBody) -> JSONResponse:
        snap = state.snapshot
        if snap is None:
            return JSONResponse(
                status_code=503,
                content={"v": WIRE_VERSION, "error": "no trained model snapshot"},
            )
        task = task_from_wire(body)
        hardware = hardware_from_wire(body, state.store)
        budget = Budget(body.budget) if body.budget is not None else None
        result = select_method(task, hardware, snap.selector, budget)
        return JSONResponse(
            content={
                "v": WIRE_VERSION,
                "method": {
                    "prefix_caching": result.method.prefix_caching,
                    "chunked_prefill": result.method.chunked_prefill,
                    "continuous_batching": result.method.continuous_batching,
                },
                "predicted_runtime_s": result.predicted_runtime_s,
                "cost": result.cost.amount,
                "model_version": snap.version,
                "ranking": [
                    {"method": method_index(m), "predicted_runtime_s": r}
                    for m, r in result.ranking
                ],
            }
        )

    @app.post("/v1/records")
    async def records_endpoint(request: Request) -> dict:
        payload = (await request.body()).decode("utf-8")
        count = state.store.ingest(payload, format="jsonl")
        state.store.save(state.config.record_store_path)
        return {"v": WIRE_VERSION, "ingested": count}

    @app.post("/v1/train")
    async def train_endpoint(body: TrainBody) -> dict:
        if len(state.store) == 0:
            raise DataError("record store is empty; ingest records before training")
        snapshot = state.train(body.selector, body.style, body.rank)
        snapshot.selector.save(state.config.model_store_path)
        return {
            "v": WIRE_VERSION,
            "model_version": snapshot.version,
            "train_rows": snapshot.train_rows,
        }

    return app


def prepare_state(config: AppConfig) -> ServiceState:
    """Load persisted artifacts and train a startup snapshot when possible."""
    state = ServiceState(config)
    state.load()
    if state.snapshot is None and len(state.store) > 0:
        state.train(
            config.default_selector, config.default_style.value, config.default_rank
        )
    return state


def serve(config: AppConfig) -> None:  # pragma: no cover - long-running entry
    import uvicorn

    app = create_app(config, state=prepare_state(config))
    uvicorn.run(app, host=config.bind_host, port=config.bind_port)
