"""Losses for density estimates: true integrated squared error against an
analytic posterior, and its estimable surrogate on held-out pairs.

For a held-out pair (theta'_k, x'_k) the per-point surrogate term is

    W_k = integral f_hat(theta | x'_k)^2 dtheta - 2 f_hat(theta'_k | x'_k)

and the surrogate-loss statistic is the sample mean of the W_k.  It estimates
the neighborhood-averaged squared error up to a constant that does not
depend on the estimator, so differences and rankings of estimators are
directly comparable even though individual values can be negative.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ConfigurationError

__all__ = ["LossReport", "ComparisonResult", "true_ise", "surrogate_loss",
           "select", "compare_pair"]


@dataclass
class LossReport:
    value: float
    se: float
    b_prime: int
    estimator_kind: str
    small_validation: bool = False


@dataclass
class ComparisonResult:
    """Paired comparison of two estimates; delta = loss(f1) - loss(f2)."""

    delta: float
    ci: tuple
    decision: str  # "f1", "f2" or "inconclusive"


def true_ise(estimate, oracle, theta_grid, x=None):
    """Trapezoid quadrature of (f_hat - f)^2 over the grid.

    The grid must cover the oracle's (truncated) support; pass the
    standardized observed summaries as ``x`` for conditional estimators.
    """
    grid = np.asarray(theta_grid, dtype=float)
    if grid.size < 16:
        raise ConfigurationError("theta grid must have at least 16 points")
    lo, hi = oracle.support
    if grid[0] > lo or grid[-1] < hi:
        raise ConfigurationError(
            f"grid [{grid[0]:g}, {grid[-1]:g}] does not cover the oracle "
            f"support [{lo:g}, {hi:g}]")
    fhat = np.asarray(estimate.evaluate(grid, x), dtype=float)
    f = oracle.pdf(grid)
    return float(np.trapezoid((fhat - f) ** 2, grid))


def surrogate_loss(estimate, validation):
    """Estimated surrogate loss of one estimate on a held-out set.

    The validation pairs must be disjoint from everything the estimate was
    fit or tuned on.  The standard error is the sample SD of the per-point
    terms divided by sqrt(B').
    """
    W = np.asarray(estimate.point_losses(validation.theta, validation.x_std))
    b_prime = W.size
    small = b_prime < 10
    if small:
        warnings.warn(f"validation size {b_prime} is very small; the loss "
                      "estimate will be noisy")
    se = float(W.std(ddof=1) / np.sqrt(b_prime)) if b_prime > 1 else np.inf
    return LossReport(value=float(W.mean()), se=se, b_prime=b_prime,
                      estimator_kind=estimate.kind, small_validation=small)


def select(estimates, validation):
    """Index of the estimate with the smallest estimated surrogate loss.

    Ties resolve to the earliest index in registration order.
    """
    if len(estimates) < 1:
        raise ConfigurationError("nothing to select from")
    values = [surrogate_loss(e, validation).value for e in estimates]
    return int(np.argmin(values))


def compare_pair(f1, f2, validation, alpha=0.05):
    """Confidence-screened paired comparison of two estimates.

    ``delta`` equals the difference of the two surrogate-loss values (same
    validation set, paired per-point).  The normal-approximation interval at
    level 1 - alpha decides: below zero -> f1, above zero -> f2, otherwise
    inconclusive.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError("alpha must be in (0, 1)")
    W1 = np.asarray(f1.point_losses(validation.theta, validation.x_std))
    W2 = np.asarray(f2.point_losses(validation.theta, validation.x_std))
    # same reduction as surrogate_loss so delta matches value1 - value2 exactly
    delta = float(W1.mean()) - float(W2.mean())
    diff = W1 - W2
    n = diff.size
    half = float(stats.norm.ppf(1.0 - alpha / 2.0) * diff.std(ddof=1) / np.sqrt(n)) \
        if n > 1 else np.inf
    ci = (delta - half, delta + half)
    if ci[0] > 0.0:
        decision = "f2"
    elif ci[1] < 0.0:
        decision = "f1"
    else:
        decision = "inconclusive"
    return ComparisonResult(delta=delta, ci=ci, decision=decision)
