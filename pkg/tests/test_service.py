import json
import warnings

import numpy as np
import pytest
from fastapi.testclient import TestClient

from metainf.config import AppConfig
from metainf.domain import Budget, method_index
from metainf.perfdb import record_to_dict
from metainf.selection import select_method
from metainf.service import ServiceState, create_app, hardware_from_wire, task_from_wire, SelectBody
from metainf.synth import SynthSpec, SyntheticWorld


@pytest.fixture(scope="module")
def world():
    return SyntheticWorld(SynthSpec(seed=29, n_train_tasks=32))


@pytest.fixture(scope="module")
def service(world, tmp_path_factory):
    tmp = tmp_path_factory.mktemp("svc")
    store = world.training_store()
    store.save(tmp / "records.json")
    config = AppConfig(
        record_store_path=str(tmp / "records.json"),
        model_store_path=str(tmp / "model.json"),
    )
    state = ServiceState(config)
    state.load()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        state.train("metainf", "rich", 8)
    app = create_app(config, state=state)
    return TestClient(app), state


def test_health(service):
    client, state = service
    resp = client.get("/v1/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert body["model_version"] == state.snapshot.version


def test_health_without_snapshot(tmp_path):
    config = AppConfig(
        record_store_path=str(tmp_path / "none.json"),
        model_store_path=str(tmp_path / "none-model.json"),
    )
    client = TestClient(create_app(config))
    body = client.get("/v1/health").json()
    assert body["model_version"] is None


def test_select_without_snapshot_is_503(tmp_path):
    config = AppConfig(
        record_store_path=str(tmp_path / "none.json"),
        model_store_path=str(tmp_path / "none-model.json"),
    )
    client = TestClient(create_app(config))
    resp = client.post(
        "/v1/select",
        json={
            "v": 1,
            "task": {"description": "d", "batch_size": 16},
            "hardware": {"gpu_class": "l4", "gpu_count": 4, "price_per_hour": 1.0},
        },
    )
    assert resp.status_code == 503


def test_select_feasible(service):
    client, state = service
    resp = client.post(
        "/v1/select",
        json={
            "v": 1,
            "task": {"description": "A conversational replay workload.", "batch_size": 64},
            "model": "llama-8b",
            "hardware": {"gpu_class": "l4", "gpu_count": 4, "price_per_hour": 3.2},
            "budget": 1000.0,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["v"] == 1
    assert set(body["method"]) == {"prefix_caching", "chunked_prefill", "continuous_batching"}
    assert body["predicted_runtime_s"] > 0
    assert body["cost"] <= 1000.0
    assert body["model_version"] == state.snapshot.version
    assert len(body["ranking"]) == 8


def test_select_infeasible_is_422_with_hint(service):
    client, _ = service
    resp = client.post(
        "/v1/select",
        json={
            "v": 1,
            "task": {"description": "d", "batch_size": 16},
            "hardware": {"gpu_class": "l4", "gpu_count": 4, "price_per_hour": 5.0},
            "budget": 0.0,
        },
    )
    assert resp.status_code == 422
    body = resp.json()
    assert "cheapest_cost" in body
    assert body["cheapest_cost"] > 0


def test_records_ingest_roundtrip(service, world):
    client, state = service
    records = world.training_store().records[:3]
    payload = "\n".join(json.dumps(record_to_dict(r)) for r in records)
    before = len(state.store)
    resp = client.post("/v1/records", content=payload)
    assert resp.status_code == 200
    assert resp.json()["ingested"] == 3
    assert len(state.store) == before  # idempotent re-ingest of known records


def test_records_conflict_is_400(service, world):
    client, _ = service
    record = record_to_dict(world.training_store().records[0])
    record["runtime_s"] = record["runtime_s"] * 2.0
    resp = client.post("/v1/records", content=json.dumps(record))
    assert resp.status_code == 400
    assert "conflict" in resp.json()["error"]


def test_train_swaps_snapshot(service):
    client, state = service
    old_version = state.snapshot.version
    resp = client.post("/v1/train", json={"v": 1, "selector": "global_best", "style": "rich", "rank": 8})
    assert resp.status_code == 200
    body = resp.json()
    assert body["train_rows"] == len(state.store)
    assert state.snapshot.version == body["model_version"]
    assert state.snapshot.selector.kind == "global_best"
    # version echoes the new snapshot in subsequent selections
    sel = client.post(
        "/v1/select",
        json={
            "v": 1,
            "task": {"description": "d", "batch_size": 16},
            "hardware": {"gpu_class": "l4", "gpu_count": 4, "price_per_hour": 1.0},
        },
    ).json()
    assert sel["model_version"] == body["model_version"]
    # restore the metainf snapshot for the equivalence test
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        state.train("metainf", "rich", 8)
    assert state.snapshot.version == old_version


def test_service_matches_library_select(service, rng):
    """Golden-path equivalence: /v1/select equals library select() bit-for-bit."""
    client, state = service
    classes = ["t4", "l4", "a100", "h999"]
    for _ in range(250):
        body = {
            "v": 1,
            "task": {
                "description": f"workload variant {rng.integers(1_000_000)}",
                "batch_size": int(rng.choice([16, 64, 256, 1024])),
                "prompt_count": int(rng.integers(1, 3000)),
            },
            "model": str(rng.choice(["llama-8b", "phi-2", "qwen-7b"])),
            "hardware": {
                "gpu_class": str(rng.choice(classes)),
                "gpu_count": int(rng.choice([1, 4, 8])),
                "price_per_hour": float(np.round(rng.uniform(0.0, 20.0), 4)),
            },
            "budget": None if rng.random() < 0.5 else float(np.round(rng.uniform(0.001, 2.0), 6)),
        }
        resp = client.post("/v1/select", json=body)
        wire = SelectBody(**body)
        task = task_from_wire(wire)
        hardware = hardware_from_wire(wire, state.store)
        budget = Budget(body["budget"]) if body["budget"] is not None else None
        try:
            expected = select_method(task, hardware, state.snapshot.selector, budget)
        except Exception:
            assert resp.status_code == 422
            continue
        assert resp.status_code == 200
        got = resp.json()
        assert got["method"] == {
            "prefix_caching": expected.method.prefix_caching,
            "chunked_prefill": expected.method.chunked_prefill,
            "continuous_batching": expected.method.continuous_batching,
        }
        assert got["predicted_runtime_s"] == expected.predicted_runtime_s
        assert got["cost"] == expected.cost.amount
        assert [r["method"] for r in got["ranking"]] == [method_index(m) for m, _ in expected.ranking]


def test_prepare_state_trains_at_startup(world, tmp_path):
    from metainf.service import prepare_state

    store = world.training_store()
    store.save(tmp_path / "records.json")
    config = AppConfig(
        record_store_path=str(tmp_path / "records.json"),
        model_store_path=str(tmp_path / "model.json"),
        default_rank=8,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        state = prepare_state(config)
    assert state.snapshot is not None
    assert state.snapshot.selector.kind == "metainf"
    client = TestClient(create_app(config, state=state))
    assert client.get("/v1/health").json()["model_version"] == state.snapshot.version


def test_hardware_from_wire_matches_catalog(service):
    _, state = service
    wire = SelectBody(
        task={"description": "d", "batch_size": 1},
        hardware={"gpu_class": "l4", "gpu_count": 4, "price_per_hour": 9.99},
    )
    hw = hardware_from_wire(wire, state.store)
    assert hw.id == "l4x4"  # catalog identity reused
    assert hw.price_per_hour == 9.99  # request price kept for costing
    wire2 = SelectBody(
        task={"description": "d", "batch_size": 1},
        hardware={"gpu_class": "b200", "gpu_count": 2, "price_per_hour": 1.0},
    )
    hw2 = hardware_from_wire(wire2, state.store)
    assert hw2.id == "b200x2"
