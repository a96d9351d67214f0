"""Historical performance records: ingest, index, persist, assemble tensor.

File format is versioned JSON holding the records plus optional task/hardware
catalogs (profiles are needed downstream for embeddings and cost rates, and
the record line schema intentionally carries only ids).
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .domain import (
    HardwareProfile,
    MethodConfig,
    PerformanceRecord,
    PerformanceTensor,
    TaskProfile,
    method_from_index,
    method_index,
)
from .errors import DataError

STORE_VERSION = 1

CSV_HEADER = [
    "task",
    "prefix_caching",
    "chunked_prefill",
    "continuous_batching",
    "hardware",
    "runtime_s",
    "runtime_std_s",
]

_BOOL_TOKENS = {
    "true": True,
    "false": False,
    "1": True,
    "0": False,
}


def _parse_bool(token: str, line_no: int) -> bool:
    value = _BOOL_TOKENS.get(str(token).strip().lower())
    if value is None:
        raise DataError(f"line {line_no}: bad boolean {token!r}")
    return value


class RecordStore:
    """Append-only record collection indexed by (task, method, hardware).

    Single-writer contract: concurrent readers are fine, ingestion must be
    serialized by the caller. Snapshots handed to training are plain dicts
    and never mutated afterwards.
    """

    def __init__(self) -> None:
        self._records: dict[tuple[str, int, str], PerformanceRecord] = {}
        self._tasks: dict[str, TaskProfile] = {}
        self._hardware: dict[str, HardwareProfile] = {}
        self.meta: dict = {}

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> list[PerformanceRecord]:
        return [self._records[k] for k in sorted(self._records)]

    @property
    def tasks(self) -> dict[str, TaskProfile]:
        return dict(self._tasks)

    @property
    def hardware(self) -> dict[str, HardwareProfile]:
        return dict(self._hardware)

    def get(self, task: str, method: MethodConfig, hardware: str) -> Optional[PerformanceRecord]:
        return self._records.get((task, method_index(method), hardware))

    def register_task(self, profile: TaskProfile) -> None:
        existing = self._tasks.get(profile.id)
        if existing is not None and existing != profile:
            raise DataError(f"conflicting task profile for id {profile.id!r}")
        self._tasks[profile.id] = profile

    def register_hardware(self, profile: HardwareProfile) -> None:
        existing = self._hardware.get(profile.id)
        if existing is not None and existing != profile:
            raise DataError(f"conflicting hardware profile for id {profile.id!r}")
        self._hardware[profile.id] = profile

    def add(self, record: PerformanceRecord) -> None:
        """Idempotent on identical records; conflicting runtimes are an error."""
        key = record.key
        existing = self._records.get(key)
        if existing is None:
            self._records[key] = record
            return
        if existing != record:
            raise DataError(
                f"conflicting record for key (task={key[0]!r}, method={key[1]}, "
                f"hardware={key[2]!r}): {existing.runtime_s} vs {record.runtime_s}"
            )

    def ingest(self, stream: Iterable[str] | str, format: str = "jsonl") -> int:
        """Parse serialized records and add them; returns the count ingested."""
        if isinstance(stream, str):
            lines: Iterable[str] = io.StringIO(stream)
        else:
            lines = stream
        if format == "jsonl":
            return self._ingest_jsonl(lines)
        if format == "csv":
            return self._ingest_csv(lines)
        raise DataError(f"unknown ingest format: {format!r}")

    def _ingest_jsonl(self, lines: Iterable[str]) -> int:
        count = 0
        for line_no, line in enumerate(lines, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {line_no}: malformed JSON ({exc.msg})") from exc
            try:
                record = record_from_dict(obj)
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"line {line_no}: bad record ({exc})") from exc
            self.add(record)
            count += 1
        return count

    def _ingest_csv(self, lines: Iterable[str]) -> int:
        reader = csv.reader(lines)
        try:
            header = next(reader)
        except StopIteration:
            return 0
        if [h.strip() for h in header] != CSV_HEADER:
            raise DataError(f"line 1: bad CSV header {header!r}, expected {CSV_HEADER!r}")
        count = 0
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 6:
                raise DataError(f"line {line_no}: expected {len(CSV_HEADER)} columns, got {len(row)}")
            try:
                std_raw = row[6].strip() if len(row) > 6 else ""
                record = PerformanceRecord(
                    task=row[0].strip(),
                    method=MethodConfig(
                        _parse_bool(row[1], line_no),
                        _parse_bool(row[2], line_no),
                        _parse_bool(row[3], line_no),
                    ),
                    hardware=row[4].strip(),
                    runtime_s=float(row[5]),
                    runtime_std_s=float(std_raw) if std_raw else None,
                )
            except DataError:
                raise
            except (TypeError, ValueError) as exc:
                raise DataError(f"line {line_no}: bad record ({exc})") from exc
            self.add(record)
            count += 1
        return count

    def assemble_tensor(self) -> PerformanceTensor:
        """Dense tensor over the sorted distinct ids of each axis."""
        if not self._records:
            raise DataError("cannot assemble a tensor from an empty store")
        task_ids = sorted({k[0] for k in self._records})
        method_idxs = sorted({k[1] for k in self._records})
        hw_ids = sorted({k[2] for k in self._records})
        values = np.full((len(task_ids), len(method_idxs), len(hw_ids)), np.nan)
        tpos = {t: i for i, t in enumerate(task_ids)}
        mpos = {m: j for j, m in enumerate(method_idxs)}
        hpos = {h: k for k, h in enumerate(hw_ids)}
        for (task, midx, hw), record in self._records.items():
            values[tpos[task], mpos[midx], hpos[hw]] = record.runtime_s
        methods = [method_from_index(m) for m in method_idxs]
        return PerformanceTensor(task_ids, methods, hw_ids, values)

    def to_dict(self) -> dict:
        return {
            "version": STORE_VERSION,
            "kind": "metainf-records",
            "records": [record_to_dict(r) for r in self.records],
            "tasks": [task_to_dict(t) for _, t in sorted(self._tasks.items())],
            "hardware": [hardware_to_dict(h) for _, h in sorted(self._hardware.items())],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RecordStore":
        version = obj.get("version")
        if version != STORE_VERSION:
            raise DataError(f"unsupported store version: {version!r}")
        store = cls()
        for t in obj.get("tasks", []):
            store.register_task(task_from_dict(t))
        for h in obj.get("hardware", []):
            store.register_hardware(hardware_from_dict(h))
        for r in obj.get("records", []):
            store.add(record_from_dict(r))
        store.meta = dict(obj.get("meta", {}))
        return store

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "RecordStore":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"store file {path}: malformed JSON ({exc.msg})") from exc
        return cls.from_dict(obj)


def record_to_dict(record: PerformanceRecord) -> dict:
    obj = {
        "task": record.task,
        "prefix_caching": record.method.prefix_caching,
        "chunked_prefill": record.method.chunked_prefill,
        "continuous_batching": record.method.continuous_batching,
        "hardware": record.hardware,
        "runtime_s": record.runtime_s,
    }
    if record.runtime_std_s is not None:
        obj["runtime_std_s"] = record.runtime_std_s
    return obj


def record_from_dict(obj: dict) -> PerformanceRecord:
    std = obj.get("runtime_std_s")
    return PerformanceRecord(
        task=str(obj["task"]),
        method=MethodConfig(
            bool(obj["prefix_caching"]),
            bool(obj["chunked_prefill"]),
            bool(obj["continuous_batching"]),
        ),
        hardware=str(obj["hardware"]),
        runtime_s=float(obj["runtime_s"]),
        runtime_std_s=float(std) if std is not None else None,
    )


def task_to_dict(t: TaskProfile) -> dict:
    return {
        "id": t.id,
        "description": t.description,
        "batch_size": t.batch_size,
        "prompt_count": t.prompt_count,
        "source_tag": t.source_tag,
    }


def task_from_dict(obj: dict) -> TaskProfile:
    return TaskProfile(
        id=str(obj["id"]),
        description=str(obj["description"]),
        batch_size=int(obj["batch_size"]),
        prompt_count=int(obj.get("prompt_count", 1)),
        source_tag=str(obj.get("source_tag", "")),
    )


def hardware_to_dict(h: HardwareProfile) -> dict:
    return {
        "id": h.id,
        "gpu_class": h.gpu_class,
        "gpu_count": h.gpu_count,
        "memory_gb": h.memory_gb,
        "price_per_hour": h.price_per_hour,
        "description": h.description,
    }


def hardware_from_dict(obj: dict) -> HardwareProfile:
    return HardwareProfile(
        id=str(obj["id"]),
        gpu_class=str(obj["gpu_class"]),
        gpu_count=int(obj["gpu_count"]),
        memory_gb=float(obj["memory_gb"]),
        price_per_hour=float(obj["price_per_hour"]),
        description=str(obj.get("description", "")),
    )


def tensor_to_dict(t: PerformanceTensor) -> dict:
    values = [
        [[None if np.isnan(v) else float(v) for v in row] for row in plane]
        for plane in t.values
    ]
    return {
        "version": STORE_VERSION,
        "kind": "metainf-tensor",
        "tasks": t.tasks,
        "methods": [method_index(m) for m in t.methods],
        "hardware": t.hardware,
        "values": values,
    }


def tensor_from_dict(obj: dict) -> PerformanceTensor:
    if obj.get("version") != STORE_VERSION:
        raise DataError(f"unsupported tensor version: {obj.get('version')!r}")
    values = np.array(
        [[[np.nan if v is None else v for v in row] for row in plane] for plane in obj["values"]],
        dtype=np.float64,
    )
    if values.size == 0:
        values = values.reshape(len(obj["tasks"]), len(obj["methods"]), len(obj["hardware"]))
    return PerformanceTensor(
        [str(t) for t in obj["tasks"]],
        [method_from_index(int(m)) for m in obj["methods"]],
        [str(h) for h in obj["hardware"]],
        values,
    )
