"""Rejection-sampler behavior: targeting modes, the quantile-threshold
correspondence, convergence toward the posterior as the tolerance shrinks,
and training-set persistence."""

import numpy as np
import pytest
from scipy import stats

from lfcde import (GaussianMeanModel, rejection_sample, split_train_validation)
from lfcde.errors import BudgetExhaustedError, ConfigurationError
from lfcde.sampling import DistanceFn, TrainingSet
from lfcde.summaries import compute_summaries, make_summarizer


def _setup(prior_sd=2.0, n_obs=20, xbar=1.0):
    model = GaussianMeanModel(prior_sd=prior_sd, n_obs=n_obs)
    summarize = make_summarizer(["mean"])
    x_o = compute_summaries(np.full(n_obs, xbar), ["mean"])
    return model, summarize, x_o


def test_rate_one_is_prior_predictive_sample():
    model, summarize, x_o = _setup()
    rng = np.random.default_rng(0)
    T = rejection_sample(model, x_o, summarize, rng, B=1000, acceptance_rate=1.0)
    assert T.B == 1000
    assert T.n_proposed == 1000
    assert np.isinf(T.epsilon)
    assert T.acceptance_rate == 1.0


def test_rate_mode_proposal_count():
    model, summarize, x_o = _setup()
    rng = np.random.default_rng(1)
    T = rejection_sample(model, x_o, summarize, rng, B=1000, acceptance_rate=0.01)
    assert T.n_proposed == 100_000
    assert T.B == 1000


def test_rate_mode_epsilon_is_bth_smallest_distance():
    model, summarize, x_o = _setup()
    seed = np.random.SeedSequence(42)
    T = rejection_sample(model, x_o, summarize, np.random.default_rng(seed),
                         B=200, acceptance_rate=0.1)
    # replay the proposal pool with the same stream
    rng = np.random.default_rng(seed)
    theta = model.sample_prior(rng, size=2000)
    values, _ = summarize(model.simulate(theta, rng), rng)
    dists = DistanceFn().bind(T.standardizer, T.x_o)(T.standardizer.transform(values))
    assert T.epsilon == np.sort(dists)[199]
    assert np.all(T.distances <= T.epsilon)
    assert T.distances.max() == T.epsilon


def test_epsilon_mode_strict_inequality_and_rate_bookkeeping():
    model, summarize, x_o = _setup()
    rng = np.random.default_rng(3)
    T = rejection_sample(model, x_o, summarize, rng, B=300, epsilon=0.5,
                         chunk_size=1000)
    assert T.B == 300
    assert np.all(T.distances < 0.5)
    assert T.epsilon == 0.5
    assert abs(T.acceptance_rate * T.n_proposed - T.B) < 1e-9


def test_epsilon_mode_posterior_consistency():
    # tiny tolerance: accepted parameter mean approaches the posterior mean
    model, summarize, x_o = _setup(prior_sd=2.0, xbar=1.0)
    rng = np.random.default_rng(4)
    T = rejection_sample(model, x_o, summarize, rng, B=400, epsilon=0.02,
                         chunk_size=20_000)
    oracle = model.true_posterior(np.full(20, 1.0))
    post_sd = np.sqrt(1 / (1 / 4 + 20))
    se = post_sd / np.sqrt(400)
    assert abs(T.theta.mean() - oracle.mean()) < 3 * se + 0.01


def test_ks_distance_decreases_with_epsilon():
    model, summarize, x_o = _setup(prior_sd=2.0, xbar=1.0)
    oracle = model.true_posterior(np.full(20, 1.0))
    B = 2000
    ks = []
    for i, eps in enumerate([np.inf, 1.0, 0.1, 0.01]):
        rng = np.random.default_rng(100 + i)
        if np.isinf(eps):
            T = rejection_sample(model, x_o, summarize, rng, B=B,
                                 acceptance_rate=1.0)
        else:
            T = rejection_sample(model, x_o, summarize, rng, B=B, epsilon=eps,
                                 chunk_size=50_000)
        ks.append(stats.kstest(T.theta, oracle.cdf).statistic)
    noise = 2 * 1.36 / np.sqrt(B)
    for a, b in zip(ks, ks[1:]):
        assert b <= a + noise
    assert ks[-1] < ks[0]


def test_budget_exhausted():
    model, summarize, x_o = _setup()
    rng = np.random.default_rng(5)
    with pytest.raises(BudgetExhaustedError):
        rejection_sample(model, x_o, summarize, rng, B=1000, epsilon=1e-6,
                         proposal_cap=5000, chunk_size=1000)
    with pytest.raises(BudgetExhaustedError):
        rejection_sample(model, x_o, summarize, rng, B=1000,
                         acceptance_rate=1e-5, proposal_cap=10_000)


def test_target_mode_validation():
    model, summarize, x_o = _setup()
    rng = np.random.default_rng(6)
    with pytest.raises(ConfigurationError):
        rejection_sample(model, x_o, summarize, rng, B=10,
                         acceptance_rate=0.5, epsilon=1.0)
    with pytest.raises(ConfigurationError):
        rejection_sample(model, x_o, summarize, rng, B=10)
    with pytest.raises(ConfigurationError):
        rejection_sample(model, x_o, summarize, rng, B=0, acceptance_rate=0.5)


def test_split_sizes_and_partition():
    model, summarize, x_o = _setup()
    rng = np.random.default_rng(7)
    T = rejection_sample(model, x_o, summarize, rng, B=1000, acceptance_rate=1.0)
    train, val = split_train_validation(T, 0.5, np.random.default_rng(8))
    assert train.B == 500 and val.B == 500
    merged = np.sort(np.concatenate([train.theta, val.theta]))
    np.testing.assert_array_equal(merged, np.sort(T.theta))
    assert train.standardizer is T.standardizer
    assert val.standardizer is T.standardizer


def test_split_deterministic_for_seed():
    model, summarize, x_o = _setup()
    T = rejection_sample(model, x_o, summarize, np.random.default_rng(9),
                         B=100, acceptance_rate=1.0)
    a1, b1 = split_train_validation(T, 0.3, np.random.default_rng(11))
    a2, b2 = split_train_validation(T, 0.3, np.random.default_rng(11))
    np.testing.assert_array_equal(a1.theta, a2.theta)
    np.testing.assert_array_equal(b1.x, b2.x)


def test_split_validation_errors():
    model, summarize, x_o = _setup()
    T = rejection_sample(model, x_o, summarize, np.random.default_rng(10),
                         B=10, acceptance_rate=1.0)
    with pytest.raises(ConfigurationError):
        split_train_validation(T, 0.05, np.random.default_rng(0))  # part < 2
    with pytest.raises(ConfigurationError):
        split_train_validation(T, 1.5, np.random.default_rng(0))


def test_csv_roundtrip(tmp_path):
    model, summarize, x_o = _setup()
    T = rejection_sample(model, x_o, summarize, np.random.default_rng(12),
                         B=50, acceptance_rate=0.5, seed=12)
    path = tmp_path / "train.csv"
    T.to_csv(path)
    back = TrainingSet.from_csv(path)
    np.testing.assert_allclose(back.theta, T.theta, rtol=1e-15)
    np.testing.assert_allclose(back.x, T.x, rtol=1e-15)
    np.testing.assert_allclose(back.distances, T.distances, atol=1e-12)
    assert back.names == T.names
    assert back.epsilon == T.epsilon
    assert back.n_proposed == T.n_proposed
    assert back.seed == 12
    np.testing.assert_allclose(back.x_o_std, T.x_o_std, atol=1e-14)


def test_distance_properties():
    rng = np.random.default_rng(13)
    values = rng.standard_normal((100, 3))
    from lfcde.summaries import Standardizer
    std = Standardizer.fit(values)
    d = DistanceFn().bind(std, values[0])
    out = d(std.transform(values))
    assert out[0] == 0.0
    assert np.all(out >= 0)
    with pytest.raises(ConfigurationError):
        DistanceFn(kind="manhattan")
