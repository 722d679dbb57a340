"""Summary statistics, standardization, and statistic-importance scoring.

The statistic roster
--------------------
mean    average of the data points
median  empirical median
mean1   average of the first half (first ceil(n/2) points when n is odd)
mean2   average of the second half (last floor(n/2) points)
sd      population standard deviation, sqrt(mean((x - xbar)^2))
iqr     75% quantile minus 25% quantile
q1      25% quantile

Quantiles use linear interpolation of order statistics (NumPy's default).
Noise coordinates are iid standard-normal draws appended after the roster;
they are regenerated per dataset so they stay genuinely uninformative.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import FourierBasis, padded_range
from .errors import CapabilityError, ConfigurationError

__all__ = [
    "ROSTER",
    "SummaryVector",
    "compute_summaries",
    "summary_matrix",
    "Standardizer",
    "ImportanceScores",
    "importance",
    "select_by_threshold",
]


def _mean1(x):
    n = x.shape[-1]
    return x[..., : (n + 1) // 2].mean(axis=-1)


def _mean2(x):
    n = x.shape[-1]
    return x[..., (n + 1) // 2:].mean(axis=-1)


_STATS = {
    "mean": lambda x: x.mean(axis=-1),
    "median": lambda x: np.median(x, axis=-1),
    "mean1": _mean1,
    "mean2": _mean2,
    "sd": lambda x: x.std(axis=-1),
    "iqr": lambda x: (np.quantile(x, 0.75, axis=-1) - np.quantile(x, 0.25, axis=-1)),
    "q1": lambda x: np.quantile(x, 0.25, axis=-1),
}

ROSTER = tuple(_STATS)


@dataclass
class SummaryVector:
    values: np.ndarray
    names: tuple


def _noise_names(noise_count):
    return tuple(f"noise{i + 1}" for i in range(noise_count))


def summary_matrix(data, roster, noise_count=0, rng=None, components=1):
    """Summary statistics for a batch of datasets.

    ``data`` has shape (..., n_obs) for scalar observations or
    (..., n_obs, 2) with ``components=2`` for paired observations (only the
    'mean' statistic is defined there, one coordinate per component).

    Returns (values, names) where values has shape (..., d).
    """
    data = np.asarray(data, dtype=float)
    roster = list(roster)
    noise_count = int(noise_count)
    if noise_count < 0:
        raise ConfigurationError("noise_count must be nonnegative")
    if not roster and noise_count == 0:
        raise ConfigurationError("empty roster with no noise statistics")
    unknown = [s for s in roster if s not in _STATS]
    if unknown:
        raise ConfigurationError(f"unknown statistics: {unknown}; roster is {ROSTER}")
    if not np.all(np.isfinite(data)):
        raise ValueError("data must be finite")

    if components == 2:
        if any(s != "mean" for s in roster):
            raise ConfigurationError("only 'mean' is defined for paired observations")
        cols = [data[..., 0].mean(axis=-1), data[..., 1].mean(axis=-1)] if roster else []
        names = ("mean[0]", "mean[1]") if roster else ()
    else:
        cols = [_STATS[s](data) for s in roster]
        names = tuple(roster)

    batch_shape = data.shape[:-1] if components == 1 else data.shape[:-2]
    if noise_count:
        if rng is None:
            raise ConfigurationError("noise statistics require an rng")
        noise = rng.standard_normal(batch_shape + (noise_count,))
        cols = cols + [noise[..., i] for i in range(noise_count)]
        names = names + _noise_names(noise_count)
    return np.stack(cols, axis=-1), names


def compute_summaries(data, roster, noise_count=0, rng=None, components=1):
    """Summary vector for a single dataset."""
    values, names = summary_matrix(data, roster, noise_count, rng, components)
    return SummaryVector(values=values, names=names)


def make_summarizer(roster, noise_count=0, components=1):
    """Closure ``summarize(data, rng) -> (values, names)`` for the sampler."""
    roster = list(roster)

    def summarize(data, rng=None):
        return summary_matrix(data, roster, noise_count, rng, components)

    return summarize


class Standardizer:
    """Per-coordinate affine transform to zero mean and unit variance.

    Fit on training summaries and then applied unchanged to the observed
    point and any validation data.  Zero-variance coordinates are centered
    but left unscaled; ``degenerate`` records which ones.
    """

    def __init__(self, mean, scale, degenerate=None):
        self.mean = np.asarray(mean, dtype=float)
        self.scale = np.asarray(scale, dtype=float)
        if degenerate is None:
            degenerate = np.zeros(self.mean.shape, dtype=bool)
        self.degenerate = np.asarray(degenerate, dtype=bool)

    @classmethod
    def fit(cls, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 2:
            raise ConfigurationError("standardization needs at least 2 vectors")
        mean = values.mean(axis=0)
        scale = values.std(axis=0)
        degenerate = scale == 0.0
        if degenerate.any():
            warnings.warn(f"zero-variance summary coordinates at {np.where(degenerate)[0]}; "
                          "centered but not scaled")
        scale = np.where(degenerate, 1.0, scale)
        return cls(mean, scale, degenerate)

    def transform(self, values):
        return (np.asarray(values, dtype=float) - self.mean) / self.scale

    def __call__(self, values):
        return self.transform(values)


@dataclass
class ImportanceScores:
    """Per-statistic relevance for posterior estimation.

    ``u[j]`` is the arithmetic mean over basis indices of ``breakdown[i, j]``,
    the per-regression importance of statistic j when predicting the i-th
    basis function of the parameter.
    """

    u: np.ndarray
    breakdown: np.ndarray
    names: tuple
    n_terms: int
    tuning: dict = field(default_factory=dict)

    def to_frame(self):
        import pandas as pd
        cols = {"statistic": list(self.names), "u": self.u}
        for i in range(self.n_terms):
            cols[f"u_{i + 1}"] = self.breakdown[i]
        return pd.DataFrame(cols)

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)


def importance(train, n_terms, regressor, base_seed=0):
    """Average per-basis regression importances over the first ``n_terms``
    basis functions of the (rescaled) parameter.

    ``train`` needs ``theta``, ``x_std`` and ``names`` attributes; the
    regressor must expose per-covariate importances after fitting.
    """
    n_terms = int(n_terms)
    if n_terms < 1:
        raise ConfigurationError("n_terms must be at least 1")
    if not getattr(regressor, "has_importances", False):
        raise CapabilityError(
            f"regression method '{getattr(regressor, 'kind', regressor)}' "
            "does not provide covariate importances")
    theta = np.asarray(train.theta, dtype=float)
    X = np.asarray(train.x_std, dtype=float)
    basis = FourierBasis(n_terms, padded_range(theta))
    targets = basis.design(theta)
    breakdown = np.zeros((n_terms, X.shape[1]))
    for i in range(n_terms):
        y = targets[:, i]
        if np.ptp(y) == 0.0:
            continue  # constant target (phi_1): nothing to explain
        fitted = regressor.spawn(random_state=base_seed + i)
        fitted.fit(X, y)
        breakdown[i] = fitted.importances
    u = breakdown.mean(axis=0)
    return ImportanceScores(u=u, breakdown=breakdown, names=tuple(train.names),
                            n_terms=n_terms)


def select_by_threshold(scores, threshold):
    """Names of statistics with importance strictly above the threshold."""
    if threshold < 0:
        raise ConfigurationError("threshold must be nonnegative")
    keep = scores.u > threshold
    return [name for name, k in zip(scores.names, keep) if k]
