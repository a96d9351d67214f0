import json

import numpy as np
import pytest

from metainf.gbm import (
    GbmHyperparams,
    GbmModel,
    memorization_hyperparams,
    predict_gbm,
    train_gbm,
    train_gbm_rows,
)


def test_constant_target_predicts_constant(rng):
    X = rng.standard_normal((30, 4))
    y = np.full(30, 7.5)
    hp = GbmHyperparams(n_rounds=1, learning_rate=1.0)
    model = train_gbm(X, y, hp, target_transform="identity")
    assert np.allclose(predict_gbm(model, X), 7.5)


def test_line_fit_training_rmse(rng):
    x = np.linspace(0.0, 1.0, 100)
    y = x.copy()
    X = x[:, None]
    model = train_gbm(X, y, GbmHyperparams(), target_transform="identity")
    pred = predict_gbm(model, X)
    rmse = float(np.sqrt(np.mean((pred - y) ** 2)))
    assert rmse <= 0.05 * (y.max() - y.min())
    # depth-4 piecewise-constant oracle bound: a single tree with 16 leaves on
    # a uniform grid cannot do worse than 1/(2*16) max error per cell; the
    # boosted ensemble must beat that comfortably on its own training data
    assert rmse <= 1.0 / (2 * 16)


def test_mse_non_increasing_two_rounds(rng):
    X = rng.standard_normal((60, 3))
    y = rng.uniform(1.0, 5.0, 60)
    model = train_gbm(X, y, GbmHyperparams(n_rounds=2), target_transform="identity")
    assert model.train_mse[1] <= model.train_mse[0] + 1e-12


def test_mse_non_increasing_20_random_datasets(rng):
    for trial in range(20):
        n = int(rng.integers(20, 80))
        d = int(rng.integers(1, 6))
        X = rng.standard_normal((n, d))
        y = rng.uniform(0.5, 10.0, n)
        hp = GbmHyperparams(n_rounds=25, seed=trial)
        model = train_gbm(X, y, hp, target_transform="identity")
        mse = np.asarray(model.train_mse)
        assert (np.diff(mse) <= 1e-12).all(), f"dataset {trial} MSE increased"


def test_memorization_noiseless(rng):
    X = rng.standard_normal((40, 3))
    y = np.exp(rng.standard_normal(40))  # positive, distinct
    model = train_gbm(X, y, memorization_hyperparams(40), target_transform="identity")
    pred = predict_gbm(model, X)
    assert float(np.sqrt(np.mean((pred - y) ** 2))) <= 1e-6


def test_training_row_predicts_own_target(rng):
    X = rng.standard_normal((25, 4))
    y = rng.uniform(1.0, 9.0, 25)
    model = train_gbm(X, y, memorization_hyperparams(25), target_transform="identity")
    for i in range(25):
        assert abs(predict_gbm(model, X[i]) - y[i]) <= 1e-6


def test_purity_of_predict(rng):
    X = rng.standard_normal((30, 3))
    y = rng.uniform(1.0, 2.0, 30)
    model = train_gbm(X, y, GbmHyperparams(n_rounds=10))
    x = rng.standard_normal(3)
    assert predict_gbm(model, x) == predict_gbm(model, x)


def test_row_order_invariance(rng):
    X = rng.standard_normal((50, 4))
    y = rng.uniform(1.0, 5.0, 50)
    hp = GbmHyperparams(n_rounds=20, seed=3)
    model_a = train_gbm(X, y, hp)
    perm = rng.permutation(50)
    model_b = train_gbm(X[perm], y[perm], hp)
    Q = rng.standard_normal((200, 4))
    assert np.array_equal(predict_gbm(model_a, Q), predict_gbm(model_b, Q))


def test_log_transform_positive_predictions(rng):
    X = rng.standard_normal((40, 3))
    y = rng.uniform(0.001, 0.01, 40)
    model = train_gbm(X, y, GbmHyperparams(n_rounds=5))
    assert model.target_transform == "log"
    pred = predict_gbm(model, rng.standard_normal((100, 3)))
    assert (pred > 0).all()


def test_serialization_roundtrip_identical_predictions(rng):
    X = rng.standard_normal((60, 5))
    y = rng.uniform(1.0, 100.0, 60)
    model = train_gbm(X, y, GbmHyperparams(n_rounds=30))
    clone = GbmModel.from_dict(json.loads(json.dumps(model.to_dict())))
    Q = rng.standard_normal((1000, 5))
    assert np.array_equal(predict_gbm(model, Q), predict_gbm(clone, Q))


def test_model_file_roundtrip(tmp_path, rng):
    X = rng.standard_normal((20, 2))
    y = rng.uniform(1.0, 2.0, 20)
    model = train_gbm(X, y, GbmHyperparams(n_rounds=5), layout={"data_dim": 1})
    path = tmp_path / "model.json"
    model.save(path)
    clone = GbmModel.load(path)
    assert clone.layout == {"data_dim": 1}
    assert np.array_equal(predict_gbm(model, X), predict_gbm(clone, X))


def test_subsample_deterministic(rng):
    X = rng.standard_normal((80, 3))
    y = rng.uniform(1.0, 4.0, 80)
    hp = GbmHyperparams(n_rounds=10, subsample=0.6, seed=11)
    a = train_gbm(X, y, hp)
    b = train_gbm(X, y, hp)
    Q = rng.standard_normal((50, 3))
    assert np.array_equal(predict_gbm(a, Q), predict_gbm(b, Q))


def test_train_rows_wrapper(rng):
    rows = [(rng.standard_normal(3), float(rng.uniform(1, 2))) for _ in range(12)]
    model = train_gbm_rows(rows, GbmHyperparams(n_rounds=3))
    assert model.n_features == 3


def test_validation_errors(rng):
    with pytest.raises(ValueError):
        train_gbm(np.ones((1, 2)), np.ones(1))
    with pytest.raises(ValueError):
        train_gbm(np.ones((3, 2)), np.array([1.0, np.nan, 2.0]))
    with pytest.raises(ValueError):
        train_gbm(np.ones((3, 2)), np.array([1.0, -1.0, 2.0]))  # log transform
    model = train_gbm(np.arange(10, dtype=float)[:, None], np.arange(1, 11, dtype=float))
    with pytest.raises(ValueError):
        predict_gbm(model, np.ones(5))


def test_hyperparam_validation():
    with pytest.raises(ValueError):
        GbmHyperparams(n_rounds=0)
    with pytest.raises(ValueError):
        GbmHyperparams(learning_rate=0.0)
    with pytest.raises(ValueError):
        GbmHyperparams(learning_rate=1.5)
    with pytest.raises(ValueError):
        GbmHyperparams(subsample=0.0)


def test_split_tie_break_lowest_feature(rng):
    # two identical features: the split must land on feature 0
    x = np.array([0.0, 0.0, 1.0, 1.0, 2.0, 2.0] * 2)
    X = np.stack([x, x], axis=1)
    y = x * 2.0 + 1.0
    model = train_gbm(X, y, GbmHyperparams(n_rounds=1, learning_rate=1.0, min_samples_leaf=1),
                      target_transform="identity")
    tree = model.trees[0]
    split_features = tree.feature[tree.feature >= 0]
    assert (split_features == 0).all()
