"""Regression methods and the local-linear adjustment."""

import warnings

import numpy as np
import pytest

from lfcde.errors import ConfigurationError
from lfcde.estimators import regression_adjust
from lfcde.regression import (NearestNeighborsRegression,
                              TreeEnsembleRegression, epanechnikov,
                              weighted_linear_fit)
from lfcde.sampling import TrainingSet
from lfcde.summaries import Standardizer


def make_training_set(theta, x, x_o=None):
    """Synthetic TrainingSet with an identity standardizer."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] != len(theta):
        x = x.T
    d = x.shape[1]
    std = Standardizer(np.zeros(d), np.ones(d))
    x_o = np.zeros(d) if x_o is None else np.asarray(x_o, dtype=float)
    dist = np.sqrt(((x - x_o) ** 2).sum(axis=1))
    return TrainingSet(theta=np.asarray(theta, dtype=float), x=x,
                       names=tuple(f"s{i}" for i in range(d)),
                       standardizer=std, x_o=x_o, epsilon=np.inf,
                       acceptance_rate=1.0, n_proposed=len(theta),
                       distances=dist)


def test_nn_regression_matches_hand_average():
    X = np.array([[0.0], [1.0], [2.0], [10.0]])
    y = np.array([0.0, 1.0, 2.0, 10.0])
    reg = NearestNeighborsRegression().fit(X, y)
    out = reg.predict(np.array([[0.9]]), k=2)
    assert out[0] == pytest.approx((0.0 + 1.0) / 2) or out[0] == pytest.approx((1.0 + 2.0) / 2)
    out3 = reg.predict(np.array([[0.9]]), k=3)
    assert out3[0] == pytest.approx(1.0)


def test_nn_prefix_predict_equals_per_k():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((60, 2))
    Y = rng.standard_normal((60, 3))
    reg = NearestNeighborsRegression().fit(X, Y)
    Xq = rng.standard_normal((7, 2))
    ks = np.array([1, 4, 9])
    prefix = reg.prefix_predict(Xq, ks)
    assert prefix.shape == (3, 7, 3)
    for a, k in enumerate(ks):
        idx = reg._neighbors(Xq, int(k))
        np.testing.assert_allclose(prefix[a], Y[idx].mean(axis=1), rtol=1e-12)


def test_nn_k_exceeds_training():
    reg = NearestNeighborsRegression().fit(np.zeros((5, 1)), np.zeros(5))
    with pytest.raises(ConfigurationError):
        reg.predict(np.zeros((1, 1)), k=6)


def test_tree_ensemble_importances_deterministic():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((300, 3))
    y = 2.0 * X[:, 0] + 0.1 * rng.standard_normal(300)
    a = TreeEnsembleRegression(n_estimators=20).spawn(random_state=5).fit(X, y)
    b = TreeEnsembleRegression(n_estimators=20).spawn(random_state=5).fit(X, y)
    np.testing.assert_array_equal(a.importances, b.importances)
    assert a.importances.argmax() == 0
    assert a.importances.sum() == pytest.approx(1.0)


def test_weighted_linear_fit_exact_on_linear_data():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((40, 2))
    y = 1.5 + X @ np.array([2.0, -3.0])
    coef, rank = weighted_linear_fit(X, y, np.ones(40))
    np.testing.assert_allclose(coef, [1.5, 2.0, -3.0], atol=1e-10)
    assert rank == 3


def test_epanechnikov_shape():
    u = np.array([-2.0, -1.0, 0.0, 0.5, 1.0, 2.0])
    np.testing.assert_allclose(epanechnikov(u),
                               [0.0, 0.0, 0.75, 0.75 * 0.75, 0.0, 0.0])


# ------------------------------------------------- local-linear adjustment

def test_adjust_noiseless_linear_gives_point_mass():
    rng = np.random.default_rng(3)
    x = rng.uniform(-2, 2, size=80)
    c = 0.7
    theta = c + x
    x_o = np.array([0.4])
    T = make_training_set(theta, x[:, None], x_o=x_o)
    adjusted = regression_adjust(T)
    np.testing.assert_allclose(adjusted.theta, c + x_o[0], atol=1e-9)


def test_adjust_constant_scale_identity():
    # four points on a circle around x_o share one distance (equal weights),
    # residuals +-c alternate so both regressions are exact: the adjusted
    # sample mean must equal the local fit at x_o.
    rho, c = 1.0, 0.3
    angles = np.array([0.0, 0.5, 1.0, 1.5]) * np.pi
    circle = rho * np.column_stack([np.cos(angles), np.sin(angles)])
    beta = np.array([0.8, -0.5])
    intercept = 0.2
    e = np.array([c, -c, c, -c])
    x = np.vstack([circle, [2.0, 0.0]])  # sacrificial far point, weight 0
    theta = np.concatenate([intercept + circle @ beta + e,
                            [intercept + np.array([2.0, 0.0]) @ beta]])
    T = make_training_set(theta, x, x_o=np.zeros(2))
    adjusted = regression_adjust(T)
    assert adjusted.theta.mean() == pytest.approx(intercept, abs=1e-10)


def test_adjust_rank_deficient_warns_and_degrades():
    theta = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    first = np.array([0.1, 0.4, -0.3, 0.8, -0.6])
    x = np.column_stack([first, 2.0 * first])  # collinear columns: rank 2 < 3
    T = make_training_set(theta, x)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        adjusted = regression_adjust(T)
    assert any("rank" in str(w.message) for w in caught)
    # location-only fallback shifts nothing (constant conditional mean)
    np.testing.assert_allclose(np.sort(adjusted.theta), np.sort(theta))


def test_adjust_preserves_metadata():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(50)
    theta = x + 0.1 * rng.standard_normal(50)
    T = make_training_set(theta, x[:, None])
    adjusted = regression_adjust(T)
    assert adjusted.B == T.B
    np.testing.assert_array_equal(adjusted.x, T.x)
    assert adjusted.epsilon == T.epsilon
