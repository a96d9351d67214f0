"""Gradient-boosted regression trees with exact greedy splits.

Self-contained L2 boosting: each round fits a depth-limited regression tree
to the current residuals (variance-reduction splits over sorted unique
feature values, mean-residual leaves) and predictions advance by
learning_rate times the tree output. Targets default to log(runtime) so
predictions are always positive.

Determinism: rows are canonicalized to a lexicographic order at entry, split
ties break toward the lowest feature index then lowest threshold, and the
split scan runs on a backend (compiled or numpy) that is bit-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _kernels

MIN_RUNTIME_S = 1e-6

MODEL_VERSION = 1


@dataclass(frozen=True)
class GbmHyperparams:
    n_rounds: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    min_samples_leaf: int = 5
    subsample: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must be in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "n_rounds": self.n_rounds,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "min_samples_leaf": self.min_samples_leaf,
            "subsample": self.subsample,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GbmHyperparams":
        return cls(**{k: obj[k] for k in cls().to_dict() if k in obj})


@dataclass
class RegressionTree:
    """Flat array representation; feature == -1 marks a leaf."""

    feature: np.ndarray  # int32
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    value: np.ndarray  # float64

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int32)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            f = feat[rows]
            go_left = X[rows, f] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])
        return self.value[node]

    def to_lists(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_lists(cls, obj: dict) -> "RegressionTree":
        return cls(
            feature=np.asarray(obj["feature"], dtype=np.int32),
            threshold=np.asarray(obj["threshold"], dtype=np.float64),
            left=np.asarray(obj["left"], dtype=np.int32),
            right=np.asarray(obj["right"], dtype=np.int32),
            value=np.asarray(obj["value"], dtype=np.float64),
        )


@dataclass
class GbmModel:
    base_prediction: float
    trees: list[RegressionTree]
    hyperparams: GbmHyperparams
    n_features: int
    target_transform: str = "log"  # "identity" | "log"
    layout: Optional[dict] = None
    train_mse: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "kind": "gbm",
            "base_prediction": self.base_prediction,
            "n_features": self.n_features,
            "target_transform": self.target_transform,
            "hyperparams": self.hyperparams.to_dict(),
            "layout": self.layout,
            "train_mse": self.train_mse,
            "trees": [t.to_lists() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GbmModel":
        if obj.get("version") != MODEL_VERSION or obj.get("kind") != "gbm":
            raise ValueError(f"unsupported model container: {obj.get('kind')!r} v{obj.get('version')!r}")
        return cls(
            base_prediction=float(obj["base_prediction"]),
            trees=[RegressionTree.from_lists(t) for t in obj["trees"]],
            hyperparams=GbmHyperparams.from_dict(obj["hyperparams"]),
            n_features=int(obj["n_features"]),
            target_transform=str(obj["target_transform"]),
            layout=obj.get("layout"),
            train_mse=[float(v) for v in obj.get("train_mse", [])],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GbmModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    # lexsort keys run least-significant first; make column 0 the primary key
    keys = (y,) + tuple(X[:, j] for j in range(X.shape[1] - 1, -1, -1))
    return np.lexsort(keys)


def _grow_tree(
    X: np.ndarray,
    residual: np.ndarray,
    sort_idx: np.ndarray,
    rows: np.ndarray,
    hp: GbmHyperparams,
) -> RegressionTree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    n_rows = X.shape[0]
    queue: list[tuple[int, np.ndarray, int]] = [(new_node(), rows, 0)]
    while queue:
        node_id, node_rows, depth = queue.pop(0)
        n = node_rows.shape[0]
        split = None
        if depth < hp.max_depth and n >= 2 * hp.min_samples_leaf:
            in_node = np.zeros(n_rows, dtype=np.uint8)
            in_node[node_rows] = 1
            feat, thr, proxy, total = _kernels.find_best_split(
                X, residual, sort_idx, in_node, hp.min_samples_leaf
            )
            if feat >= 0:
                gain = proxy - total * total / n
                if gain > 0.0:
                    split = (feat, thr)
        if split is None:
            value[node_id] = float(residual[node_rows].mean())
            continue
        feat, thr = split
        mask = X[node_rows, feat] <= thr
        left_rows = node_rows[mask]
        right_rows = node_rows[~mask]
        feature[node_id] = feat
        threshold[node_id] = thr
        left_id = new_node()
        right_id = new_node()
        left[node_id] = left_id
        right[node_id] = right_id
        queue.append((left_id, left_rows, depth + 1))
        queue.append((right_id, right_rows, depth + 1))

    return RegressionTree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=np.float64),
    )


def train_gbm(
    X: np.ndarray | Sequence[Sequence[float]],
    y: np.ndarray | Sequence[float],
    hp: GbmHyperparams = GbmHyperparams(),
    *,
    target_transform: str = "log",
    layout: Optional[dict] = None,
) -> GbmModel:
    """Fit the boosted ensemble on rows of (features, runtime)."""
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"bad training shapes: X {X.shape}, y {y.shape}")
    if X.shape[0] < 2:
        raise ValueError("training needs at least 2 rows")
    if not np.isfinite(X).all():
        raise ValueError("features must be finite")
    if not np.isfinite(y).all():
        raise ValueError("targets must be finite")
    if target_transform not in ("identity", "log"):
        raise ValueError(f"unknown target transform: {target_transform!r}")
    if target_transform == "log":
        if (y <= 0).any():
            raise ValueError("log transform requires positive targets")
        t = np.log(y)
    else:
        t = y.copy()

    # canonical row order makes training invariant to input row permutation
    order = _canonical_order(X, t)
    X = np.ascontiguousarray(X[order])
    t = t[order]

    n, d = X.shape
    sort_idx = np.empty((d, n), dtype=np.int32)
    for j in range(d):
        sort_idx[j] = np.argsort(X[:, j], kind="stable")

    rng = np.random.default_rng(hp.seed)
    base = float(t.mean())
    pred = np.full(n, base)
    trees: list[RegressionTree] = []
    mse_history: list[float] = []
    all_rows = np.arange(n, dtype=np.int64)
    for _ in range(hp.n_rounds):
        residual = t - pred
        if hp.subsample < 1.0:
            size = max(2 * hp.min_samples_leaf, int(round(hp.subsample * n)))
            size = min(size, n)
            rows = np.sort(rng.choice(n, size=size, replace=False))
        else:
            rows = all_rows
        tree = _grow_tree(X, residual, sort_idx, rows, hp)
        trees.append(tree)
        pred = pred + hp.learning_rate * tree.apply(X)
        mse_history.append(float(np.mean((t - pred) ** 2)))

    return GbmModel(
        base_prediction=base,
        trees=trees,
        hyperparams=hp,
        n_features=d,
        target_transform=target_transform,
        layout=layout,
        train_mse=mse_history,
    )


def predict_gbm(model: GbmModel, x: np.ndarray | Sequence[float]) -> float | np.ndarray:
    """Predicted runtime(s); accepts a single vector or a batch matrix."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != model.n_features:
        raise ValueError(
            f"feature layout mismatch: got {arr.shape[-1] if arr.ndim else 0} features, "
            f"model expects {model.n_features}"
        )
    arr = np.ascontiguousarray(arr)
    score = np.full(arr.shape[0], model.base_prediction)
    lr = model.hyperparams.learning_rate
    for tree in model.trees:
        score += lr * tree.apply(arr)
    if model.target_transform == "log":
        out = np.exp(score)
    else:
        out = score
    out = np.maximum(out, MIN_RUNTIME_S)
    if single:
        return float(out[0])
    return out


def train_gbm_rows(
    rows: Sequence[tuple[Sequence[float], float]],
    hp: GbmHyperparams = GbmHyperparams(),
    **kwargs,
) -> GbmModel:
    """Convenience wrapper over (feature_vector, runtime_s) pairs."""
    if len(rows) < 2:
        raise ValueError("training needs at least 2 rows")
    X = np.asarray([np.asarray(f, dtype=np.float64) for f, _ in rows])
    y = np.asarray([float(r) for _, r in rows])
    return train_gbm(X, y, hp, **kwargs)


def memorization_hyperparams(n_rows: int, seed: int = 0) -> GbmHyperparams:
    """lr=1, unrestricted depth, singleton leaves: exact-fit configuration."""
    return GbmHyperparams(
        n_rounds=1,
        max_depth=max(1, n_rows),
        learning_rate=1.0,
        min_samples_leaf=1,
        subsample=1.0,
        seed=seed,
    )
