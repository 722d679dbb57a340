"""Rejection sampling of training sets localized around the observed point.

The sampler draws parameters from the prior, simulates datasets, reduces
them to summary statistics, and keeps pairs whose standardized summaries
fall within a tolerance of the observed summaries.  Two targeting modes:

* epsilon mode: stream proposals and keep those with distance < epsilon
  until B are accepted (or the proposal budget runs out);
* rate mode: draw ceil(B / rate) proposals up front and keep the B nearest.
  The recorded tolerance is then the B-th smallest proposal distance, i.e.
  the empirical quantile matching the acceptance rate.  A rate of 1 keeps
  everything and records an infinite tolerance.

The standardizing transform is always fit on proposal summaries (never on
the accepted subset), so the observed point is transformed with statistics
that do not depend on the acceptance decision.
"""

import json
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from .errors import BudgetExhaustedError, ConfigurationError
from .summaries import Standardizer

__all__ = ["DistanceFn", "TrainingSet", "rejection_sample",
           "split_train_validation"]

_DISTANCE_KINDS = ("euclidean-standardized",)


class DistanceFn:
    """Euclidean distance in standardized summary coordinates."""

    def __init__(self, kind="euclidean-standardized"):
        if kind not in _DISTANCE_KINDS:
            raise ConfigurationError(f"unknown distance '{kind}'")
        self.kind = kind
        self.reference = None

    def bind(self, standardizer, x_o):
        """Fix the transform and the observed point; returns self."""
        self.standardizer = standardizer
        self.reference = standardizer.transform(np.asarray(x_o, dtype=float))
        return self

    def __call__(self, x_std):
        if self.reference is None:
            raise RuntimeError("distance not bound to an observed point yet")
        diff = np.atleast_2d(x_std) - self.reference
        return np.sqrt((diff * diff).sum(axis=1))


@dataclass
class TrainingSet:
    """Accepted (theta, x) pairs plus the acceptance bookkeeping.

    ``x`` holds raw summaries; ``x_std`` applies the stored standardizer.
    ``distances`` are standardized distances to the observed point, so all
    of them are <= epsilon (strictly below in epsilon mode).
    """

    theta: np.ndarray
    x: np.ndarray
    names: tuple
    standardizer: Standardizer
    x_o: np.ndarray
    epsilon: float
    acceptance_rate: float
    n_proposed: int
    distances: np.ndarray
    seed: int | None = None

    @property
    def B(self):
        return self.theta.shape[0]

    @property
    def x_std(self):
        return self.standardizer.transform(self.x)

    @property
    def x_o_std(self):
        return self.standardizer.transform(self.x_o)

    def subset(self, idx):
        idx = np.asarray(idx)
        return replace(self, theta=self.theta[idx], x=self.x[idx],
                       distances=self.distances[idx])

    def with_theta(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != self.theta.shape:
            raise ValueError("replacement theta has wrong shape")
        return replace(self, theta=theta)

    def to_csv(self, path):
        """Write pairs as CSV (theta, x_1..x_d) plus a JSON sidecar."""
        path = str(path)
        cols = {"theta": self.theta}
        for j in range(self.x.shape[1]):
            cols[f"x_{j + 1}"] = self.x[:, j]
        # %.17g keeps float64 round-trips exact
        pd.DataFrame(cols).to_csv(path, index=False, float_format="%.17g")
        meta = {
            "names": list(self.names),
            "epsilon": self.epsilon,
            "acceptance_rate": self.acceptance_rate,
            "B": int(self.B),
            "n_proposed": int(self.n_proposed),
            "seed": self.seed,
            "x_o": [float(v) for v in self.x_o],
            "standardizer": {
                "mean": [float(v) for v in self.standardizer.mean],
                "scale": [float(v) for v in self.standardizer.scale],
                "degenerate": [bool(v) for v in self.standardizer.degenerate],
            },
        }
        with open(path + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=1, sort_keys=True)

    @classmethod
    def from_csv(cls, path):
        path = str(path)
        frame = pd.read_csv(path, float_precision="round_trip")
        with open(path + ".meta.json") as fh:
            meta = json.load(fh)
        d = len(meta["names"])
        x = frame[[f"x_{j + 1}" for j in range(d)]].to_numpy()
        std = Standardizer(np.array(meta["standardizer"]["mean"]),
                           np.array(meta["standardizer"]["scale"]),
                           np.array(meta["standardizer"]["degenerate"]))
        x_o = np.array(meta["x_o"])
        dist = DistanceFn().bind(std, x_o)
        return cls(theta=frame["theta"].to_numpy(), x=x,
                   names=tuple(meta["names"]), standardizer=std, x_o=x_o,
                   epsilon=float(meta["epsilon"]),
                   acceptance_rate=float(meta["acceptance_rate"]),
                   n_proposed=int(meta["n_proposed"]),
                   distances=dist(std.transform(x)), seed=meta.get("seed"))


def _propose(model, summarize, rng, count):
    theta_full = model.sample_prior(rng, size=count)
    data = model.simulate(theta_full, rng)
    values, names = summarize(data, rng)
    return model.target_of(theta_full), values, names


def rejection_sample(model, x_o, summarize, rng, B, acceptance_rate=None,
                     epsilon=None, distance=None, proposal_cap=10_000_000,
                     chunk_size=8192, seed=None):
    """Draw a training set of B accepted pairs around the observed summaries.

    Parameters
    ----------
    model : benchmark model
        Provides ``sample_prior``, ``simulate`` and ``target_of``.
    x_o : SummaryVector
        Observed summaries (noise coordinates already drawn).
    summarize : callable(data, rng) -> (values, names)
        Summary reduction applied to batches of simulated datasets.
    B : int
        Number of accepted pairs to return.
    acceptance_rate, epsilon : float
        Exactly one targeting mode must be given.
    distance : DistanceFn, optional
    proposal_cap : int
        Hard limit on simulated proposals; epsilon mode raises
        ``BudgetExhaustedError`` beyond it.
    """
    B = int(B)
    if B < 1:
        raise ConfigurationError("B must be at least 1")
    if (acceptance_rate is None) == (epsilon is None):
        raise ConfigurationError("give exactly one of acceptance_rate or epsilon")
    if distance is None:
        distance = DistanceFn()
    x_o_values = np.asarray(x_o.values, dtype=float)

    if acceptance_rate is not None:
        rate = float(acceptance_rate)
        if not 0.0 < rate <= 1.0:
            raise ConfigurationError("acceptance_rate must be in (0, 1]")
        n_pool = int(np.ceil(B / rate))
        if n_pool > proposal_cap:
            raise BudgetExhaustedError(
                f"rate {rate} with B={B} needs {n_pool} proposals (cap {proposal_cap})")
        theta, values, names = _propose(model, summarize, rng, n_pool)
        if tuple(names) != tuple(x_o.names):
            raise ConfigurationError("observed summaries do not match the roster")
        standardizer = Standardizer.fit(values)
        distance.bind(standardizer, x_o_values)
        dists = distance(standardizer.transform(values))
        if rate == 1.0:
            keep = np.arange(B)
            eps_used = np.inf
        else:
            order = np.argsort(dists, kind="stable")
            keep = np.sort(order[:B])
            eps_used = float(dists[order[B - 1]])
        return TrainingSet(theta=theta[keep], x=values[keep], names=tuple(names),
                           standardizer=standardizer, x_o=x_o_values,
                           epsilon=eps_used, acceptance_rate=B / n_pool,
                           n_proposed=n_pool, distances=dists[keep], seed=seed)

    eps = float(epsilon)
    if eps <= 0:
        raise ConfigurationError("epsilon must be positive")
    standardizer = None
    acc_theta, acc_x, acc_d = [], [], []
    n_proposed = 0
    n_accepted = 0
    while n_accepted < B:
        if n_proposed >= proposal_cap:
            raise BudgetExhaustedError(
                f"{n_accepted}/{B} accepted after {n_proposed} proposals "
                f"(epsilon={eps}, cap {proposal_cap})")
        count = min(chunk_size, proposal_cap - n_proposed)
        theta, values, names = _propose(model, summarize, rng, count)
        if standardizer is None:
            if tuple(names) != tuple(x_o.names):
                raise ConfigurationError("observed summaries do not match the roster")
            standardizer = Standardizer.fit(values)
            distance.bind(standardizer, x_o_values)
        dists = distance(standardizer.transform(values))
        hits = np.where(dists < eps)[0]
        needed = B - n_accepted
        if hits.size >= needed:
            hits = hits[:needed]
            # proposals after the B-th acceptance do not count as consumed
            n_proposed += int(hits[-1]) + 1
        else:
            n_proposed += count
        acc_theta.append(theta[hits])
        acc_x.append(values[hits])
        acc_d.append(dists[hits])
        n_accepted += hits.size
    return TrainingSet(theta=np.concatenate(acc_theta),
                       x=np.concatenate(acc_x), names=tuple(names),
                       standardizer=standardizer, x_o=x_o_values,
                       epsilon=eps, acceptance_rate=B / n_proposed,
                       n_proposed=n_proposed,
                       distances=np.concatenate(acc_d), seed=seed)


def split_train_validation(train_set, fraction, rng):
    """Random disjoint split; ``fraction`` is the validation share.

    Both parts keep the parent's standardizer, observed point and
    acceptance metadata.
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError("fraction must be in (0, 1)")
    B = train_set.B
    if B < 4:
        raise ConfigurationError("need at least 4 pairs to split")
    n_val = int(round(B * fraction))
    if n_val < 2 or B - n_val < 2:
        raise ConfigurationError(f"split {B - n_val}/{n_val} leaves a part below 2")
    perm = rng.permutation(B)
    val_idx = np.sort(perm[:n_val])
    train_idx = np.sort(perm[n_val:])
    return train_set.subset(train_idx), train_set.subset(val_idx)
