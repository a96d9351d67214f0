"""Method selectors behind one interface: fit on history, rank for a context.

Kinds:
  metainf     gradient-boosted meta-learner on concatenated embeddings
  global_best per-(method, hardware) historical mean runtime
  isac        k-means clusters of task embeddings, per-cluster best
  argosmart   1-nearest-neighbor copy of the most similar task's ordering
  alors       low-rank factorization with ridge cold-start from embeddings
  ridge       linear model on the same features as metainf

Every fitted selector returns a total order over the training method universe,
ascending by predicted runtime with ties broken by method index. All kinds
consume the same Embedder for fairness; hardware prices never enter scoring.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .domain import (
    HardwareProfile,
    MethodConfig,
    PerformanceTensor,
    TaskProfile,
    method_from_index,
    method_index,
)
from .embedding import Embedder
from .errors import ConvergenceError, DataError
from .features import build_features, layout_for
from .gbm import GbmHyperparams, GbmModel, predict_gbm, train_gbm
from .linear import RidgeModel, predict_ridge, train_ridge

SELECTOR_KINDS = ("metainf", "global_best", "isac", "argosmart", "alors", "ridge")

CONTAINER_VERSION = 1


@dataclass(frozen=True)
class SelectorSpec:
    kind: str
    isac_clusters: int = 3
    neighbors: int = 1
    latent_rank: int = 3
    als_epochs: int = 200
    als_reg: float = 0.1
    als_tol: float = 1e-4
    ridge_lambda: float = 1.0
    gbm: GbmHyperparams = field(default_factory=GbmHyperparams)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in SELECTOR_KINDS:
            raise ValueError(f"unknown selector kind: {self.kind!r}")
        for name in ("isac_clusters", "neighbors", "latent_rank", "als_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.als_reg < 0 or self.ridge_lambda < 0:
            raise ValueError("regularization must be >= 0")


def _rank_from_scores(
    methods: Sequence[MethodConfig], scores: Sequence[float]
) -> list[tuple[MethodConfig, float]]:
    order = sorted(range(len(methods)), key=lambda i: (scores[i], method_index(methods[i])))
    return [(methods[i], float(scores[i])) for i in order]


class FittedSelector:
    """Immutable post-fit; rank_methods is pure and safe to call concurrently."""

    kind: str = ""

    def __init__(self, methods: Sequence[MethodConfig]):
        self.methods = list(methods)

    def rank_methods(
        self, task: TaskProfile, hardware: HardwareProfile
    ) -> list[tuple[MethodConfig, float]]:
        raise NotImplementedError

    def state_dict(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "version": CONTAINER_VERSION,
            "kind": self.kind,
            "methods": [method_index(m) for m in self.methods],
            "state": self.state_dict(),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")


def _tensor_cells(tensor: PerformanceTensor):
    """Present cells as (task_pos, method_pos, hw_pos, runtime) tuples."""
    present = np.argwhere(~np.isnan(tensor.values))
    for i, j, k in present:
        yield int(i), int(j), int(k), float(tensor.values[i, j, k])


def _profile_for(task_id: str, tasks: dict[str, TaskProfile]) -> TaskProfile:
    profile = tasks.get(task_id)
    if profile is None:
        warnings.warn(f"no profile for task {task_id!r}; using a minimal default", stacklevel=3)
        profile = TaskProfile(id=task_id, description=task_id, batch_size=1)
    return profile


def _hw_for(hw_id: str, hardware: dict[str, HardwareProfile]) -> HardwareProfile:
    profile = hardware.get(hw_id)
    if profile is None:
        warnings.warn(f"no profile for hardware {hw_id!r}; using a minimal default", stacklevel=3)
        profile = HardwareProfile(
            id=hw_id, gpu_class=hw_id, gpu_count=1, memory_gb=1.0, price_per_hour=0.0
        )
    return profile


def _feature_rows(
    tensor: PerformanceTensor,
    embedder: Embedder,
    tasks: dict[str, TaskProfile],
    hardware: dict[str, HardwareProfile],
) -> tuple[np.ndarray, np.ndarray]:
    task_profiles = [_profile_for(t, tasks) for t in tensor.tasks]
    hw_profiles = [_hw_for(h, hardware) for h in tensor.hardware]
    rows = []
    y = []
    for i, j, k, runtime in _tensor_cells(tensor):
        rows.append(
            build_features(task_profiles[i], tensor.methods[j], hw_profiles[k], embedder)
        )
        y.append(runtime)
    return np.asarray(rows), np.asarray(y)


def _task_embedding_matrix(
    tensor: PerformanceTensor, embedder: Embedder, tasks: dict[str, TaskProfile]
) -> np.ndarray:
    return np.asarray(
        [embedder.data_vector(_profile_for(t, tasks)) for t in tensor.tasks]
    )


class MetaInfSelector(FittedSelector):
    kind = "metainf"

    def __init__(self, methods, model: GbmModel, embedder: Embedder):
        super().__init__(methods)
        self.model = model
        self.embedder = embedder

    def rank_methods(self, task, hardware):
        X = np.asarray(
            [build_features(task, m, hardware, self.embedder) for m in self.methods]
        )
        scores = predict_gbm(self.model, X)
        return _rank_from_scores(self.methods, scores)

    def state_dict(self) -> dict:
        return {"model": self.model.to_dict(), "embedder": self.embedder.to_dict()}

    @classmethod
    def _from_state(cls, methods, state: dict) -> "MetaInfSelector":
        return cls(methods, GbmModel.from_dict(state["model"]), Embedder.from_dict(state["embedder"]))


class GlobalBestSelector(FittedSelector):
    kind = "global_best"

    def __init__(self, methods, hw_ids, mean_by_hw: np.ndarray, marginal: np.ndarray):
        super().__init__(methods)
        self.hw_ids = list(hw_ids)
        self.mean_by_hw = mean_by_hw  # (h, m)
        self.marginal = marginal  # (m,)
        self._hw_pos = {h: i for i, h in enumerate(self.hw_ids)}

    def rank_methods(self, task, hardware):
        pos = self._hw_pos.get(hardware.id)
        scores = self.marginal if pos is None else self.mean_by_hw[pos]
        return _rank_from_scores(self.methods, scores)

    def state_dict(self) -> dict:
        return {
            "hw_ids": self.hw_ids,
            "mean_by_hw": self.mean_by_hw.tolist(),
            "marginal": self.marginal.tolist(),
        }

    @classmethod
    def _from_state(cls, methods, state: dict) -> "GlobalBestSelector":
        return cls(
            methods,
            state["hw_ids"],
            np.asarray(state["mean_by_hw"], dtype=np.float64),
            np.asarray(state["marginal"], dtype=np.float64),
        )


def kmeans_lloyd(
    X: np.ndarray, clusters: int, seed: int, restarts: int = 10, max_iter: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded multi-restart Lloyd's; returns (centroids, assignments)."""
    n = X.shape[0]
    if clusters > n:
        raise DataError(f"{n} tasks cannot support {clusters} clusters")
    rng = np.random.default_rng(seed)
    best_inertia = np.inf
    best: Optional[tuple[np.ndarray, np.ndarray]] = None
    for _ in range(restarts):
        centroids = X[rng.choice(n, size=clusters, replace=False)].copy()
        assign = np.full(n, -1, dtype=np.int64)
        for _ in range(max_iter):
            d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
            new_assign = d2.argmin(axis=1)
            for c in range(clusters):
                members = new_assign == c
                if members.any():
                    centroids[c] = X[members].mean(axis=0)
                else:
                    # revive an empty cluster with the worst-fit point
                    worst = int(d2[np.arange(n), new_assign].argmax())
                    centroids[c] = X[worst]
                    new_assign[worst] = c
            if (new_assign == assign).all():
                break
            assign = new_assign
        inertia = float(((X - centroids[assign]) ** 2).sum())
        if inertia < best_inertia:
            best_inertia = inertia
            best = (centroids.copy(), assign.copy())
    assert best is not None
    return best


class IsacSelector(FittedSelector):
    kind = "isac"

    def __init__(self, methods, embedder, centroids, hw_ids, mean_by_cluster_hw, marginal_by_cluster):
        super().__init__(methods)
        self.embedder = embedder
        self.centroids = centroids  # (c, k)
        self.hw_ids = list(hw_ids)
        self.mean_by_cluster_hw = mean_by_cluster_hw  # (c, h, m)
        self.marginal_by_cluster = marginal_by_cluster  # (c, m)
        self._hw_pos = {h: i for i, h in enumerate(self.hw_ids)}

    def _cluster_of(self, task) -> int:
        e = self.embedder.data_vector(task)
        d2 = ((self.centroids - e[None, :]) ** 2).sum(axis=1)
        return int(d2.argmin())

    def rank_methods(self, task, hardware):
        c = self._cluster_of(task)
        pos = self._hw_pos.get(hardware.id)
        scores = self.marginal_by_cluster[c] if pos is None else self.mean_by_cluster_hw[c, pos]
        return _rank_from_scores(self.methods, scores)

    def state_dict(self) -> dict:
        return {
            "embedder": self.embedder.to_dict(),
            "centroids": self.centroids.tolist(),
            "hw_ids": self.hw_ids,
            "mean_by_cluster_hw": self.mean_by_cluster_hw.tolist(),
            "marginal_by_cluster": self.marginal_by_cluster.tolist(),
        }

    @classmethod
    def _from_state(cls, methods, state: dict) -> "IsacSelector":
        return cls(
            methods,
            Embedder.from_dict(state["embedder"]),
            np.asarray(state["centroids"], dtype=np.float64),
            state["hw_ids"],
            np.asarray(state["mean_by_cluster_hw"], dtype=np.float64),
            np.asarray(state["marginal_by_cluster"], dtype=np.float64),
        )


class ArgosmartSelector(FittedSelector):
    kind = "argosmart"

    def __init__(self, methods, embedder, task_ids, task_embeddings, hw_ids, values, marginal):
        super().__init__(methods)
        self.embedder = embedder
        self.task_ids = list(task_ids)
        self.task_embeddings = task_embeddings  # (n, k)
        self.hw_ids = list(hw_ids)
        self.values = values  # (n, m, h) with inf for missing
        self.marginal = marginal  # (n, m) mean over seen hardware
        self._hw_pos = {h: i for i, h in enumerate(self.hw_ids)}

    def rank_methods(self, task, hardware):
        e = self.embedder.data_vector(task)
        d2 = ((self.task_embeddings - e[None, :]) ** 2).sum(axis=1)
        nearest = int(d2.argmin())
        pos = self._hw_pos.get(hardware.id)
        scores = self.marginal[nearest] if pos is None else self.values[nearest, :, pos]
        return _rank_from_scores(self.methods, scores)

    def state_dict(self) -> dict:
        return {
            "embedder": self.embedder.to_dict(),
            "task_ids": self.task_ids,
            "task_embeddings": self.task_embeddings.tolist(),
            "hw_ids": self.hw_ids,
            "values": np.where(np.isinf(self.values), None, self.values).tolist(),
            "marginal": self.marginal.tolist(),
        }

    @classmethod
    def _from_state(cls, methods, state: dict) -> "ArgosmartSelector":
        raw = np.asarray(
            [[[np.inf if v is None else v for v in row] for row in plane] for plane in state["values"]],
            dtype=np.float64,
        )
        return cls(
            methods,
            Embedder.from_dict(state["embedder"]),
            state["task_ids"],
            np.asarray(state["task_embeddings"], dtype=np.float64),
            state["hw_ids"],
            raw,
            np.asarray(state["marginal"], dtype=np.float64),
        )


def als_factorize(
    matrix: np.ndarray,
    rank: int,
    reg: float,
    epochs: int,
    tol: float,
    seed: int,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Alternating least squares on the observed (non-NaN) cells."""
    mask = ~np.isnan(matrix)
    if not mask.any():
        raise DataError("ALS needs at least one observed cell")
    n, c = matrix.shape
    rng = np.random.default_rng(seed)
    scale = np.sqrt(np.nanmean(np.abs(matrix)) / max(rank, 1))
    U = rng.standard_normal((n, rank)) * scale
    V = rng.standard_normal((c, rank)) * scale
    eye = np.eye(rank)
    last_loss = np.inf
    for _ in range(epochs):
        for i in range(n):
            cols = np.nonzero(mask[i])[0]
            if cols.size == 0:
                continue
            A = V[cols]
            U[i] = np.linalg.solve(A.T @ A + reg * eye, A.T @ matrix[i, cols])
        for j in range(c):
            rows = np.nonzero(mask[:, j])[0]
            if rows.size == 0:
                continue
            A = U[rows]
            V[j] = np.linalg.solve(A.T @ A + reg * eye, A.T @ matrix[rows, j])
        resid = (matrix - U @ V.T)[mask]
        loss = float((resid**2).sum() + reg * ((U**2).sum() + (V**2).sum()))
        if np.isfinite(last_loss) and abs(last_loss - loss) <= tol * max(abs(last_loss), 1e-12):
            return U, V, loss
        last_loss = loss
    raise ConvergenceError(
        f"ALS did not converge within {epochs} epochs", last_loss=last_loss
    )


class AlorsSelector(FittedSelector):
    kind = "alors"

    def __init__(self, methods, embedder, hw_ids, item_factors, coldstart: RidgeModel):
        super().__init__(methods)
        self.embedder = embedder
        self.hw_ids = list(hw_ids)
        self.item_factors = item_factors  # (m*h, r), column index = j*h + k
        self.coldstart = coldstart  # multi-output via stacked weights (d, r)
        self._hw_pos = {h: i for i, h in enumerate(self.hw_ids)}

    def _latent(self, task) -> np.ndarray:
        e = self.embedder.data_vector(task)
        return e @ self.coldstart.weights + self.coldstart.intercept

    def rank_methods(self, task, hardware):
        u = self._latent(task)
        h = len(self.hw_ids)
        pos = self._hw_pos.get(hardware.id)
        scores = []
        for j in range(len(self.methods)):
            block = self.item_factors[j * h : (j + 1) * h]
            if pos is None:
                scores.append(float(block.mean(axis=0) @ u))
            else:
                scores.append(float(block[pos] @ u))
        return _rank_from_scores(self.methods, scores)

    def state_dict(self) -> dict:
        return {
            "embedder": self.embedder.to_dict(),
            "hw_ids": self.hw_ids,
            "item_factors": self.item_factors.tolist(),
            "coldstart_weights": self.coldstart.weights.tolist(),
            "coldstart_intercept": np.asarray(self.coldstart.intercept).tolist(),
            "coldstart_lambda": self.coldstart.lam,
        }

    @classmethod
    def _from_state(cls, methods, state: dict) -> "AlorsSelector":
        coldstart = RidgeModel(
            weights=np.asarray(state["coldstart_weights"], dtype=np.float64),
            intercept=np.asarray(state["coldstart_intercept"], dtype=np.float64),
            lam=float(state["coldstart_lambda"]),
        )
        return cls(
            methods,
            Embedder.from_dict(state["embedder"]),
            state["hw_ids"],
            np.asarray(state["item_factors"], dtype=np.float64),
            coldstart,
        )


class RidgeSelector(FittedSelector):
    kind = "ridge"

    def __init__(self, methods, model: RidgeModel, embedder: Embedder):
        super().__init__(methods)
        self.model = model
        self.embedder = embedder

    def rank_methods(self, task, hardware):
        X = np.asarray(
            [build_features(task, m, hardware, self.embedder) for m in self.methods]
        )
        scores = np.exp(predict_ridge(self.model, X))
        return _rank_from_scores(self.methods, scores)

    def state_dict(self) -> dict:
        return {"model": self.model.to_dict(), "embedder": self.embedder.to_dict()}

    @classmethod
    def _from_state(cls, methods, state: dict) -> "RidgeSelector":
        return cls(methods, RidgeModel.from_dict(state["model"]), Embedder.from_dict(state["embedder"]))


def fit(
    spec: SelectorSpec,
    tensor: PerformanceTensor,
    embedder: Embedder,
    tasks: dict[str, TaskProfile],
    hardware: dict[str, HardwareProfile],
) -> FittedSelector:
    """Fit one selector on the assembled performance tensor."""
    if len(tensor.tasks) < 2:
        raise DataError("fitting needs at least 2 tasks in the tensor")
    methods = tensor.methods

    if spec.kind == "metainf":
        X, y = _feature_rows(tensor, embedder, tasks, hardware)
        model = train_gbm(
            X, y, spec.gbm, target_transform="log", layout=layout_for(embedder).to_dict()
        )
        return MetaInfSelector(methods, model, embedder)

    if spec.kind == "global_best":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            mean_by_hw = np.nanmean(tensor.values, axis=0).T  # (h, m)
            marginal = np.nanmean(tensor.values, axis=(0, 2))  # (m,)
        mean_by_hw = np.where(np.isnan(mean_by_hw), np.inf, mean_by_hw)
        marginal = np.where(np.isnan(marginal), np.inf, marginal)
        return GlobalBestSelector(methods, tensor.hardware, mean_by_hw, marginal)

    if spec.kind == "isac":
        E = _task_embedding_matrix(tensor, embedder, tasks)
        centroids, assign = kmeans_lloyd(E, spec.isac_clusters, seed=spec.seed)
        c = centroids.shape[0]
        m, h = len(methods), len(tensor.hardware)
        mean_by_cluster_hw = np.full((c, h, m), np.inf)
        marginal_by_cluster = np.full((c, m), np.inf)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for ci in range(c):
                members = assign == ci
                if not members.any():
                    continue
                sub = tensor.values[members]  # (n_c, m, h)
                mean_by_cluster_hw[ci] = np.where(
                    np.isnan(np.nanmean(sub, axis=0)), np.inf, np.nanmean(sub, axis=0)
                ).T
                marg = np.nanmean(sub, axis=(0, 2))
                marginal_by_cluster[ci] = np.where(np.isnan(marg), np.inf, marg)
        return IsacSelector(
            methods, embedder, centroids, tensor.hardware, mean_by_cluster_hw, marginal_by_cluster
        )

    if spec.kind == "argosmart":
        E = _task_embedding_matrix(tensor, embedder, tasks)
        values = np.where(np.isnan(tensor.values), np.inf, tensor.values)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            marginal = np.nanmean(tensor.values, axis=2)  # (n, m)
        marginal = np.where(np.isnan(marginal), np.inf, marginal)
        return ArgosmartSelector(
            methods, embedder, tensor.tasks, E, tensor.hardware, values, marginal
        )

    if spec.kind == "alors":
        n, m, h = tensor.shape
        flat = tensor.values.reshape(n, m * h)  # column = j*h + k
        U, V, _ = als_factorize(
            flat, spec.latent_rank, spec.als_reg, spec.als_epochs, spec.als_tol, spec.seed
        )
        E = _task_embedding_matrix(tensor, embedder, tasks)
        # multi-output ridge from embeddings to task latent factors
        weights = np.empty((E.shape[1], spec.latent_rank))
        intercepts = np.empty(spec.latent_rank)
        for r in range(spec.latent_rank):
            rm = train_ridge(E, U[:, r], spec.ridge_lambda)
            weights[:, r] = rm.weights
            intercepts[r] = rm.intercept
        coldstart = RidgeModel(weights=weights, intercept=intercepts, lam=spec.ridge_lambda)
        return AlorsSelector(methods, embedder, tensor.hardware, V, coldstart)

    if spec.kind == "ridge":
        X, y = _feature_rows(tensor, embedder, tasks, hardware)
        model = train_ridge(X, np.log(y), spec.ridge_lambda)
        return RidgeSelector(methods, model, embedder)

    raise ValueError(f"unknown selector kind: {spec.kind!r}")


_REGISTRY = {
    cls.kind: cls
    for cls in (
        MetaInfSelector,
        GlobalBestSelector,
        IsacSelector,
        ArgosmartSelector,
        AlorsSelector,
        RidgeSelector,
    )
}


def selector_from_dict(obj: dict) -> FittedSelector:
    if obj.get("version") != CONTAINER_VERSION:
        raise DataError(f"unsupported selector container version: {obj.get('version')!r}")
    kind = obj.get("kind")
    cls = _REGISTRY.get(kind)
    if cls is None:
        raise DataError(f"unknown selector kind in container: {kind!r}")
    methods = [method_from_index(int(i)) for i in obj["methods"]]
    return cls._from_state(methods, obj["state"])


def load_selector(path: str | Path) -> FittedSelector:
    return selector_from_dict(json.loads(Path(path).read_text()))
