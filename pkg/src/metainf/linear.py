"""Ridge regression baseline learner (plain centered L2 solve)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass
class RidgeModel:
    weights: np.ndarray
    intercept: float
    lam: float

    def to_dict(self) -> dict:
        return {
            "kind": "ridge",
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
            "lam": self.lam,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RidgeModel":
        return cls(
            weights=np.asarray(obj["weights"], dtype=np.float64),
            intercept=float(obj["intercept"]),
            lam=float(obj["lam"]),
        )


def train_ridge(X, y, lam: float) -> RidgeModel:
    """Solve (Xc'Xc + lam*I) w = Xc'y on centered data; intercept from means."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise ValueError(f"bad training shapes: X {X.shape}, y {y.shape}")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    yc = y - y_mean
    gram = Xc.T @ Xc + lam * np.eye(X.shape[1])
    try:
        weights = np.linalg.solve(gram, Xc.T @ yc)
    except np.linalg.LinAlgError as exc:
        raise DataError(
            "singular normal equations; use lambda > 0 to regularize"
        ) from exc
    if lam == 0.0 and not np.allclose(gram @ weights, Xc.T @ yc, atol=1e-6 * max(1.0, np.abs(yc).max())):
        raise DataError("singular normal equations; use lambda > 0 to regularize")
    intercept = y_mean - float(weights @ x_mean)
    return RidgeModel(weights=weights, intercept=intercept, lam=lam)


def predict_ridge(model: RidgeModel, x) -> float | np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] != model.weights.shape[0]:
        raise ValueError(
            f"feature dim {arr.shape[1]} != model dim {model.weights.shape[0]}"
        )
    out = arr @ model.weights + model.intercept
    return float(out[0]) if single else out
