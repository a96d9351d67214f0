import numpy as np
import pytest

from metainf.errors import DataError
from metainf.linear import RidgeModel, predict_ridge, train_ridge


def test_exact_linear_fit():
    x = np.arange(10, dtype=float)[:, None]
    y = 2.0 * x[:, 0] + 1.0
    model = train_ridge(x, y, lam=0.0)
    assert abs(model.weights[0] - 2.0) <= 1e-8
    assert abs(model.intercept - 1.0) <= 1e-8
    assert abs(predict_ridge(model, np.array([5.0])) - 11.0) <= 1e-8


def test_huge_lambda_shrinks_to_mean(rng):
    X = rng.standard_normal((30, 4))
    y = rng.uniform(0.0, 10.0, 30)
    model = train_ridge(X, y, lam=1e9)
    assert np.abs(model.weights).max() <= 1e-3
    assert abs(predict_ridge(model, X.mean(axis=0)) - y.mean()) <= 1e-3


def test_matches_normal_equations_oracle(rng):
    # independent route: explicit inverse of the centered normal equations
    X = rng.standard_normal((20, 5))
    y = rng.standard_normal(20)
    lam = 0.1
    model = train_ridge(X, y, lam)
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    w_oracle = np.linalg.inv(Xc.T @ Xc + lam * np.eye(5)) @ (Xc.T @ yc)
    assert np.allclose(model.weights, w_oracle, atol=1e-8)
    b_oracle = y.mean() - w_oracle @ X.mean(axis=0)
    assert abs(model.intercept - b_oracle) <= 1e-8


def test_singular_system_advises_lambda():
    X = np.ones((5, 2))  # zero variance after centering -> singular at lam=0
    y = np.arange(5, dtype=float)
    with pytest.raises(DataError, match="lambda"):
        train_ridge(X, y, lam=0.0)


def test_negative_lambda_rejected(rng):
    with pytest.raises(ValueError):
        train_ridge(rng.standard_normal((4, 2)), np.ones(4), lam=-0.1)


def test_predict_dim_check(rng):
    model = train_ridge(rng.standard_normal((6, 3)), np.ones(6), lam=1.0)
    with pytest.raises(ValueError):
        predict_ridge(model, np.ones(4))


def test_model_roundtrip(rng):
    model = train_ridge(rng.standard_normal((8, 3)), rng.standard_normal(8), lam=0.5)
    clone = RidgeModel.from_dict(model.to_dict())
    q = rng.standard_normal(3)
    assert predict_ridge(model, q) == predict_ridge(clone, q)
