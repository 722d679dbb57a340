"""Conditional density estimators fit to rejection-sampled training sets.

Four estimators share one interface (:class:`DensityEstimate`):

* ``fit_abc_kde``      -- x-independent Gaussian KDE over the accepted
  parameter values; the baseline every other method tries to beat.
* ``fit_nn_kde``       -- kernel density over the parameter values of the k
  nearest neighbors of the query point, (k, h) tuned by surrogate loss.
* ``fit_series_cde``   -- orthogonal-series estimate whose coefficients are
  regressions of the basis functions on the summaries; the cutoff (and the
  neighbor count for the nearest-neighbors regressor) tuned by surrogate loss.
* ``regression_adjust`` + ``fit_adjusted_kde`` -- local-linear location/scale
  adjustment of the accepted parameters toward the observed point, followed
  by the marginal KDE.

Estimators operate in standardized summary coordinates throughout: every
``x`` argument below is a standardized summary vector (or matrix), exactly
what :class:`lfcde.sampling.TrainingSet` exposes as ``x_std``.

The surrogate loss of an estimate on a held-out set is the sample mean of
per-point terms

    W = integral f_hat(theta | x')^2 dtheta - 2 f_hat(theta' | x'),

which estimates the integrated squared error up to an estimator-independent
constant.  ``point_losses`` computes the W vector; each estimator overrides
it with a vectorized path.
"""

import warnings

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .basis import FourierBasis, padded_range
from .errors import ConfigurationError, EstimatorError
from .regression import (NearestNeighborsRegression, TreeEnsembleRegression,
                         epanechnikov, weighted_linear_fit)

__all__ = [
    "DensityEstimate", "StaticDensity", "OracleDensity",
    "fit_abc_kde", "fit_nn_kde", "fit_series_cde",
    "regression_adjust", "fit_adjusted_kde",
]


class DensityEstimate:
    """Evaluable conditional density f(theta | x)."""

    kind = "density"

    def __init__(self):
        self.tuning = {}

    def evaluate(self, theta, x=None):
        raise NotImplementedError

    def squared_integral(self, x=None):
        raise NotImplementedError

    def point_losses(self, theta, X):
        """Per-point surrogate-loss terms W over a validation set."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(theta.size)
        for i in range(theta.size):
            out[i] = self.squared_integral(X[i]) - 2.0 * float(
                self.evaluate(theta[i], X[i]))
        return out


class StaticDensity(DensityEstimate):
    """x-independent density wrapper, mostly for oracles and test baselines."""

    def __init__(self, pdf, squared_integral, kind="static"):
        super().__init__()
        self._pdf = pdf
        self._sq = float(squared_integral)
        self.kind = kind

    @classmethod
    def from_oracle(cls, oracle, kind="oracle"):
        return cls(oracle.pdf, oracle.squared_integral(), kind=kind)

    def evaluate(self, theta, x=None):
        return np.asarray(self._pdf(np.asarray(theta, dtype=float)))

    def squared_integral(self, x=None):
        return self._sq

    def point_losses(self, theta, X=None):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return self._sq - 2.0 * np.asarray(self._pdf(theta), dtype=float)


class OracleDensity(DensityEstimate):
    """The analytic posterior wrapped as a conditional estimator.

    Maps each standardized summary vector back to raw summaries and looks up
    the model's closed-form posterior.  Only available for benchmark models;
    used to validate the surrogate loss itself.
    """

    kind = "oracle"

    def __init__(self, model, standardizer, names):
        super().__init__()
        self.model = model
        self.standardizer = standardizer
        self.names = tuple(names)

    def _oracle_at(self, x):
        raw = np.asarray(x, dtype=float) * self.standardizer.scale + self.standardizer.mean
        return self.model.posterior_from_summaries(dict(zip(self.names, raw)))

    def evaluate(self, theta, x=None):
        if x is None:
            raise ValueError("the oracle estimator is conditional; pass x")
        return self._oracle_at(x).pdf(theta)

    def squared_integral(self, x=None):
        return self._oracle_at(x).squared_integral()


def _silverman(theta):
    sd = theta.std()
    iqr = np.subtract(*np.quantile(theta, [0.75, 0.25]))
    scale = min(sd, iqr / 1.349) if iqr > 0 else sd
    return 0.9 * scale * theta.size ** (-0.2)


class MarginalKDE(DensityEstimate):
    """Gaussian KDE over accepted parameter values; independent of x."""

    kind = "abc_kde"

    def __init__(self, theta, bandwidth, tuning=None):
        super().__init__()
        self.theta = np.asarray(theta, dtype=float)
        self.bandwidth = float(bandwidth)
        self.tuning = tuning or {"bandwidth": self.bandwidth}
        self._sq = None

    def evaluate(self, theta, x=None):
        return kernels.gauss_mixture_pdf(self.theta, theta, self.bandwidth)

    def squared_integral(self, x=None):
        if self._sq is None:
            n, h = self.theta.size, self.bandwidth
            total = kernels.conv_total(self.theta, h)
            self._sq = kernels.CONV_NORM * total / (n * n * h)
        return self._sq

    def point_losses(self, theta, X=None):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return self.squared_integral() - 2.0 * kernels.gauss_mixture_pdf(
            self.theta, theta, self.bandwidth)


def fit_abc_kde(train, bandwidth=None, bandwidth_grid=None):
    """Marginal KDE with bandwidth chosen by leave-one-out likelihood CV.

    The grid defaults to a log-spaced decade around the Silverman rule.
    Pass ``bandwidth`` to skip cross-validation entirely.
    """
    theta = np.asarray(train.theta, dtype=float)
    if theta.size < 10:
        raise ConfigurationError("marginal KDE needs at least 10 accepted points")
    if np.ptp(theta) == 0.0:
        raise EstimatorError("degenerate sample: all accepted parameters identical")
    if bandwidth is not None:
        return MarginalKDE(theta, bandwidth, {"bandwidth": float(bandwidth),
                                              "cv": "fixed"})
    if bandwidth_grid is None:
        h0 = _silverman(theta)
        bandwidth_grid = h0 * np.logspace(-1.0, 1.0, 13)
    grid = np.asarray(bandwidth_grid, dtype=float)
    ll = kernels.kde_loo_loglik(theta, grid)
    h = float(grid[int(np.argmax(ll))])
    return MarginalKDE(theta, h, {"bandwidth": h, "cv": "loo-likelihood",
                                  "grid": [float(g) for g in grid]})


class KNNDensity(DensityEstimate):
    """Kernel density over the parameter values of the k nearest neighbors."""

    kind = "nn_kde"

    def __init__(self, train_x, train_theta, k, h, tuning=None):
        super().__init__()
        self.x = np.atleast_2d(np.asarray(train_x, dtype=float))
        self.theta = np.asarray(train_theta, dtype=float)
        self.k = int(k)
        self.h = float(h)
        self._tree = cKDTree(self.x)
        self.tuning = tuning or {"k": self.k, "h": self.h}

    def _neighbor_theta(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        _, idx = self._tree.query(X, k=self.k)
        idx = idx.reshape(X.shape[0], self.k)
        return self.theta[idx]

    def evaluate(self, theta, x=None):
        if x is None:
            raise ValueError("nearest-neighbor density is conditional; pass x")
        nbr = self._neighbor_theta(np.asarray(x, dtype=float)[None, :])[0]
        return kernels.gauss_mixture_pdf(nbr, theta, self.h)

    def _all_points_sq(self):
        # with k equal to the training size the neighborhood is everything,
        # so the squared integral no longer depends on x
        n, h = self.theta.size, self.h
        return kernels.CONV_NORM * kernels.conv_total(self.theta, h) / (n * n * h)

    def squared_integral(self, x=None):
        if self.k == self.theta.size:
            return float(self._all_points_sq())
        nbr = self._neighbor_theta(np.asarray(x, dtype=float)[None, :])
        out = kernels.conv_prefix(nbr, np.array([self.k]), np.array([self.h]))
        return float(out[0, 0, 0])

    def point_losses(self, theta, X):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        nbr = self._neighbor_theta(X)
        ks = np.array([self.k])
        hs = np.array([self.h])
        if self.k == self.theta.size:
            term1 = np.full(theta.size, self._all_points_sq())
        else:
            term1 = kernels.conv_prefix(nbr, ks, hs)[:, 0, 0]
        term2 = kernels.eval_prefix(nbr, theta, ks, hs)[:, 0, 0]
        return term1 - 2.0 * term2


def default_k_grid(n_train, n_points=10, k_min=3):
    """Neighbor-count grid: log-spaced small-to-moderate k plus all points.

    Intermediate k near the training size cost quadratically in the pairwise
    pass but rarely win; k equal to the training size is cheap (the
    squared-integral term is shared across validation points), so the grid
    is dense below n/4 and then jumps straight to n.
    """
    if n_train <= k_min:
        return np.array([n_train])
    inner_max = max(n_train // 4, k_min)
    grid = np.round(np.geomspace(k_min, inner_max, n_points)).astype(int)
    return np.unique(np.append(grid, n_train))


def nn_loss_grid(train, validation, k_grid, h_grid):
    """Mean surrogate-loss terms of the neighbor density over a (k, h) grid.

    One neighbor query at max(k) serves the whole grid: the pairwise kernel
    sums for smaller k are prefixes of those for larger k.  When the grid
    includes k equal to the full training size, that column's squared
    integral is the same for every validation point and is computed once.
    """
    k_grid = np.asarray(k_grid, dtype=int)
    h_grid = np.asarray(h_grid, dtype=float)
    theta_train = np.asarray(train.theta, dtype=float)
    n_train = theta_train.size
    all_points = k_grid[-1] == n_train and n_train > 1
    k_inner = k_grid[:-1] if all_points else k_grid
    kmax = int(k_grid[-1])

    tree = cKDTree(np.atleast_2d(train.x_std))
    _, idx = tree.query(np.atleast_2d(validation.x_std), k=kmax)
    nbr = theta_train[idx.reshape(-1, kmax)]
    theta_val = np.asarray(validation.theta, dtype=float)

    term2 = kernels.eval_prefix(nbr, theta_val, k_grid, h_grid)
    term1 = np.empty_like(term2)
    if k_inner.size:
        term1[:, : k_inner.size] = kernels.conv_prefix(nbr, k_inner, h_grid)
    if all_points:
        shared = np.array([kernels.CONV_NORM * kernels.conv_total(theta_train, h)
                           / (n_train * n_train * h) for h in h_grid])
        term1[:, -1, :] = shared[None, :]
    return (term1 - 2.0 * term2).mean(axis=0)


def fit_nn_kde(train, validation, k_grid=None, h_grid=None):
    """Nearest-neighbor kernel CDE tuned by the estimated surrogate loss.

    Ties prefer the smallest k, then the smallest h, so reruns report one
    deterministic winner.
    """
    n_train = len(train.theta)
    if k_grid is None:
        k_grid = default_k_grid(n_train)
    k_grid = np.unique(np.asarray(k_grid, dtype=int))
    if k_grid.size == 0:
        raise ConfigurationError("empty k grid")
    if k_grid[-1] > n_train:
        raise ConfigurationError(f"max k {k_grid[-1]} exceeds training size {n_train}")
    if h_grid is None:
        h0 = max(_silverman(np.asarray(train.theta)), 1e-8)
        h_grid = h0 * np.logspace(-1.3, 0.7, 9)
    h_grid = np.asarray(h_grid, dtype=float)
    if h_grid.size == 0:
        raise ConfigurationError("empty h grid")

    losses = nn_loss_grid(train, validation, k_grid, h_grid)
    best = (np.inf, None, None)
    for a, k in enumerate(k_grid):
        for b, h in enumerate(h_grid):
            if losses[a, b] < best[0]:
                best = (losses[a, b], int(k), float(h))
    loss, k, h = best
    tuning = {"k": k, "h": h, "loss": float(loss),
              "k_grid": [int(v) for v in k_grid],
              "h_grid": [float(v) for v in h_grid]}
    est = KNNDensity(train.x_std, train.theta, k, h, tuning)
    est.loss_grid_ = losses
    return est


class SeriesCDE(DensityEstimate):
    """Orthogonal-series conditional density with regression coefficients.

    The raw series can dip below zero; the reported density is clipped at
    zero and renormalized on the evaluation grid, and evaluates to zero
    outside the parameter range.
    """

    kind = "series"

    def __init__(self, regressor, basis, n_terms, grid, k=None, tuning=None):
        super().__init__()
        self.regressor = regressor
        self.basis = basis
        self.n_terms = int(n_terms)
        self.grid = np.asarray(grid, dtype=float)
        self.k = k
        self._phi_grid = basis.design(self.grid)[:, : self.n_terms]
        self.tuning = tuning or {"n_terms": self.n_terms}

    def _coefficients(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if isinstance(self.regressor, NearestNeighborsRegression):
            beta = self.regressor.predict(X, k=self.k)
        else:
            beta = self.regressor.predict(X)
        beta = np.atleast_2d(beta)[:, : self.n_terms]
        if not np.all(np.isfinite(beta)):
            raise EstimatorError("regression produced non-finite coefficients")
        return beta

    def _grid_density(self, X):
        """Clipped, renormalized density rows on the evaluation grid."""
        beta = self._coefficients(X)
        raw = beta @ self._phi_grid.T / self.basis.width
        return normalize_grid_rows(raw, self.grid)

    def evaluate(self, theta, x=None):
        if x is None:
            raise ValueError("series density is conditional; pass x")
        rows = self._grid_density(np.asarray(x, dtype=float)[None, :])
        vals = np.interp(np.asarray(theta, dtype=float), self.grid, rows[0],
                         left=0.0, right=0.0)
        return vals

    def squared_integral(self, x=None):
        rows = self._grid_density(np.asarray(x, dtype=float)[None, :])
        return float(np.trapezoid(rows[0] ** 2, self.grid))

    def point_losses(self, theta, X):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        rows = self._grid_density(X)
        term1 = np.trapezoid(rows**2, self.grid, axis=1)
        term2 = interp_rows(rows, self.grid, theta)
        return term1 - 2.0 * term2


def normalize_grid_rows(raw, grid):
    """Clip rows at zero and renormalize each to unit mass on the grid."""
    clipped = np.maximum(raw, 0.0)
    mass = np.trapezoid(clipped, grid, axis=-1)
    # A series with no positive part carries no information; fall back to
    # the uniform density rather than dividing by zero.
    width = grid[-1] - grid[0]
    bad = mass <= 1e-300
    if np.any(bad):
        clipped = np.where(bad[..., None], 1.0 / width, clipped)
        mass = np.where(bad, 1.0, mass)
    return clipped / mass[..., None]


def interp_rows(rows, grid, points):
    """Row-wise linear interpolation: rows[i] evaluated at points[i].

    Points outside [grid[0], grid[-1]] evaluate to zero (no density mass
    outside the parameter range).
    """
    points = np.asarray(points, dtype=float)
    inside = (points >= grid[0]) & (points <= grid[-1])
    pos = np.clip(np.searchsorted(grid, points, side="right"), 1, grid.size - 1)
    x0, x1 = grid[pos - 1], grid[pos]
    frac = (points - x0) / (x1 - x0)
    ridx = np.arange(rows.shape[0])
    vals = rows[ridx, pos - 1] * (1 - frac) + rows[ridx, pos] * frac
    return np.where(inside, vals, 0.0)


def _series_losses(beta_full, phi_grid, grid, width, theta_val):
    """Surrogate loss of the clipped series for every cutoff 1..n_terms.

    ``beta_full`` is (n_points, n_terms).  The raw series accumulates one
    term at a time so the whole cutoff path costs one pass.
    """
    n_terms = beta_full.shape[1]
    raw = np.zeros((beta_full.shape[0], grid.size))
    losses = np.empty(n_terms)
    for i in range(n_terms):
        raw += np.outer(beta_full[:, i], phi_grid[:, i]) / width
        rows = normalize_grid_rows(raw, grid)
        term1 = np.trapezoid(rows**2, grid, axis=1)
        term2 = interp_rows(rows, grid, theta_val)
        losses[i] = (term1 - 2.0 * term2).mean()
    return losses


def fit_series_cde(train, validation, regressor=None, max_terms=30,
                   theta_range=None, grid_size=1024, k_grid=None, base_seed=0):
    """Series CDE with the cutoff chosen by the estimated surrogate loss.

    For the nearest-neighbors regressor the neighbor count is tuned jointly
    with the cutoff (ties prefer smaller k, then fewer terms).  The tuning
    loss evaluates the actual reported density, i.e. after clipping and
    renormalization.
    """
    theta = np.asarray(train.theta, dtype=float)
    if regressor is None:
        regressor = NearestNeighborsRegression()
    max_terms = int(max_terms)
    if max_terms < 1:
        raise ConfigurationError("max_terms must be at least 1")
    if max_terms > len(theta) / 10:
        warnings.warn(f"max_terms={max_terms} is large for {len(theta)} "
                      "training points")
    if theta_range is None:
        theta_range = padded_range(theta)
    basis = FourierBasis(max_terms, theta_range)
    targets = basis.design(theta)
    X_train = np.atleast_2d(train.x_std)
    X_val = np.atleast_2d(validation.x_std)
    theta_val = np.asarray(validation.theta, dtype=float)
    grid = np.linspace(theta_range[0], theta_range[1], int(grid_size))
    phi_grid = basis.design(grid)

    if isinstance(regressor, NearestNeighborsRegression):
        regressor.fit(X_train, targets)
        if k_grid is None:
            k_grid = default_k_grid(len(theta), n_points=6)
        k_grid = np.unique(np.asarray(k_grid, dtype=int))
        if k_grid[-1] > len(theta):
            raise ConfigurationError("max k exceeds training size")
        beta_by_k = regressor.prefix_predict(X_val, k_grid)
        candidates = [(int(k), beta_by_k[a]) for a, k in enumerate(k_grid)]
    else:
        # one regression per basis term, deterministically seeded
        fitted = [regressor.spawn(random_state=base_seed + i).fit(X_train, targets[:, i])
                  for i in range(max_terms)]
        beta = np.column_stack([f.predict(X_val) for f in fitted])
        candidates = [(None, beta)]
        regressor = _PerTermEnsemble(fitted)

    if not np.all(np.isfinite(candidates[0][1])):
        raise EstimatorError("regression produced non-finite coefficients")

    best = (np.inf, None, None)
    loss_paths = {}
    for k, beta in candidates:
        losses = _series_losses(beta, phi_grid, grid, basis.width, theta_val)
        loss_paths[k] = losses
        for i, value in enumerate(losses):
            if value < best[0]:
                best = (value, k, i + 1)
    loss, k, n_terms = best
    tuning = {"n_terms": int(n_terms), "loss": float(loss),
              "max_terms": max_terms,
              "regressor": getattr(regressor, "kind", "per-term"),
              "theta_range": [float(theta_range[0]), float(theta_range[1])]}
    if k is not None:
        tuning["k"] = int(k)
    est = SeriesCDE(regressor, basis, n_terms, grid, k=k, tuning=tuning)
    est.loss_paths_ = loss_paths
    return est


class _PerTermEnsemble:
    """Bundle of per-basis-term regressors presenting one predict()."""

    kind = "tree-ensemble"

    def __init__(self, fitted):
        self._fitted = fitted

    def predict(self, X):
        return np.column_stack([f.predict(X) for f in self._fitted])


def regression_adjust(train, x_o_std=None):
    """Local-linear location/scale adjustment of accepted parameters.

    Fits a weighted linear regression of theta on the standardized summaries
    (Epanechnikov weights in distance to the observed point, bandwidth equal
    to the largest accepted distance), a second one on absolute residuals
    for the conditional scale, and maps each accepted value to

        theta_i -> m(x_o) + (theta_i - m(x_i)) * s(x_o) / s(x_i).

    Returns a new training set with the adjusted parameter values.  When the
    weighted design is rank deficient the adjustment degrades to a pure
    location shift and a warning is issued.
    """
    X = np.atleast_2d(train.x_std)
    y = np.asarray(train.theta, dtype=float)
    if x_o_std is None:
        x_o_std = train.x_o_std
    x_o_std = np.asarray(x_o_std, dtype=float)
    dist = np.asarray(train.distances, dtype=float)
    delta = dist.max()
    if delta <= 0:
        raise EstimatorError("all accepted points coincide with the observed point")
    w = epanechnikov(dist / delta)
    if w.sum() <= 0:  # every point sits exactly at the bandwidth edge
        w = np.ones_like(w)

    coef, rank = weighted_linear_fit(X, y, w)
    if rank < X.shape[1] + 1:
        warnings.warn("rank-deficient local-linear design; falling back to a "
                      "location-only adjustment")
        m_train = np.full(y.shape, np.average(y, weights=w))
        m_obs = m_train[0]
        ratio = np.ones_like(y)
        return train.with_theta(m_obs + (y - m_train) * ratio)

    design = np.column_stack([np.ones(X.shape[0]), X])
    m_train = design @ coef
    m_obs = float(np.concatenate([[1.0], x_o_std]) @ coef)
    resid = y - m_train

    scoef, srank = weighted_linear_fit(X, np.abs(resid), w)
    floor = max(1e-12, 1e-3 * float(np.average(np.abs(resid), weights=w)))
    if srank < X.shape[1] + 1:
        s_train = np.full(y.shape, max(float(np.average(np.abs(resid), weights=w)),
                                       floor))
        s_obs = s_train[0]
    else:
        s_train = np.maximum(design @ scoef, floor)
        s_obs = max(float(np.concatenate([[1.0], x_o_std]) @ scoef), floor)
    return train.with_theta(m_obs + resid * (s_obs / s_train))


def fit_adjusted_kde(train, x_o_std=None, bandwidth=None):
    """Marginal KDE on the regression-adjusted parameter values."""
    adjusted = regression_adjust(train, x_o_std)
    theta = np.asarray(adjusted.theta)
    if np.ptp(theta) == 0.0:
        # exact-fit degenerate case: a point mass; keep a tiny positive spread
        theta = theta + 1e-9 * np.arange(theta.size)
        adjusted = adjusted.with_theta(theta)
    est = fit_abc_kde(adjusted, bandwidth=bandwidth)
    est.kind = "adjusted_kde"
    est.tuning["adjustment"] = "local-linear"
    return est
