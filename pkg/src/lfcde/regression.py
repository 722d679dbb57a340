"""Regression methods pluggable into the series density estimator.

Both methods share a minimal surface: ``fit(X, Y)``, ``predict(X)``, a
``kind`` identifier, and (for the tree ensemble) per-covariate
``importances`` after fitting.  The nearest-neighbors method additionally
supports prefix predictions over a grid of neighbor counts, which the
series estimator uses to tune k cheaply.
"""

import numpy as np
from scipy.spatial import cKDTree
from sklearn.ensemble import RandomForestRegressor

from .errors import ConfigurationError

__all__ = ["NearestNeighborsRegression", "TreeEnsembleRegression",
           "build_regressor", "weighted_linear_fit", "epanechnikov"]


class NearestNeighborsRegression:
    """Average of the responses of the k nearest training points."""

    kind = "nearest-neighbors"
    has_importances = False

    def __init__(self, k=None):
        if k is not None and int(k) < 1:
            raise ConfigurationError("k must be positive")
        self.k = None if k is None else int(k)
        self._tree = None
        self._Y = None

    def spawn(self, random_state=None):
        return NearestNeighborsRegression(k=self.k)

    def fit(self, X, Y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self._Y = np.asarray(Y, dtype=float)
        if self._Y.shape[0] != X.shape[0]:
            raise ValueError("X and Y row counts differ")
        self._tree = cKDTree(X)
        self.n_train = X.shape[0]
        return self

    def _neighbors(self, X, k):
        if k > self.n_train:
            raise ConfigurationError(f"k={k} exceeds training size {self.n_train}")
        _, idx = self._tree.query(np.atleast_2d(X), k=k)
        return np.atleast_1d(idx).reshape(-1, k)  # k=1 queries come back squeezed

    def predict(self, X, k=None):
        k = self.k if k is None else int(k)
        if k is None:
            raise ConfigurationError("no neighbor count set")
        idx = self._neighbors(X, k)
        return self._Y[idx].mean(axis=1)

    def prefix_predict(self, X, k_values):
        """Predictions for every k in an increasing grid, one tree query.

        Returns an array of shape (len(k_values), n_points) + Y.shape[1:].
        """
        k_values = np.asarray(k_values, dtype=int)
        if np.any(np.diff(k_values) <= 0) or k_values[0] < 1:
            raise ConfigurationError("k grid must be strictly increasing and >= 1")
        idx = self._neighbors(X, int(k_values[-1]))
        gathered = self._Y[idx]  # (m, kmax, ...)
        prefix = np.cumsum(gathered, axis=1)
        means = prefix[:, k_values - 1] / k_values[None, :].reshape(
            (1, -1) + (1,) * (gathered.ndim - 2))
        return np.moveaxis(means, 1, 0)


class TreeEnsembleRegression:
    """Random-forest regression with impurity-decrease importances.

    ``min_samples_leaf`` defaults to 5: deep pure leaves soak up impurity
    credit on noise covariates, which distorts the importance scores.
    """

    kind = "tree-ensemble"
    has_importances = True

    def __init__(self, n_estimators=100, min_samples_leaf=5, max_depth=None,
                 random_state=None, n_jobs=1):
        self.params = dict(n_estimators=int(n_estimators),
                           min_samples_leaf=int(min_samples_leaf),
                           max_depth=max_depth, n_jobs=n_jobs)
        self.random_state = random_state
        self._forest = None

    def spawn(self, random_state=None):
        out = TreeEnsembleRegression(random_state=random_state, **self.params)
        return out

    def fit(self, X, Y):
        self._forest = RandomForestRegressor(random_state=self.random_state,
                                             **self.params)
        self._forest.fit(np.atleast_2d(X), np.asarray(Y, dtype=float))
        return self

    def predict(self, X):
        return self._forest.predict(np.atleast_2d(X))

    @property
    def importances(self):
        if self._forest is None:
            raise RuntimeError("fit before asking for importances")
        return self._forest.feature_importances_


def build_regressor(kind, **params):
    if kind == "nearest-neighbors":
        return NearestNeighborsRegression(**params)
    if kind == "tree-ensemble":
        return TreeEnsembleRegression(**params)
    raise ConfigurationError(f"unknown regression method '{kind}'")


def epanechnikov(u):
    """Epanechnikov kernel 0.75 (1 - u^2) on |u| <= 1."""
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def weighted_linear_fit(X, y, weights):
    """Weighted least squares of y on [1, X].

    Returns (coef, rank): coef[0] is the intercept.  Rows with zero weight
    drop out of the fit.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    design = np.column_stack([np.ones(X.shape[0]), X])
    sw = np.sqrt(w)
    coef, _, rank, _ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    return coef, rank
