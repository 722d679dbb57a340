"""Benchmark-model checks: analytic posteriors against brute-force Bayes
quadrature, Monte Carlo moment checks for priors and simulators, and the
constructor invariants."""

import numpy as np
import pytest
from scipy import integrate, stats

from lfcde import build_model
from lfcde.errors import ConfigurationError
from lfcde.models import (BivariateGaussianMeanModel, GaussianMeanModel,
                          GaussianMixtureMeanModel, NormalGammaModel)

N_MC = 100_000


def quad_mass(oracle):
    val, _ = integrate.quad(oracle.pdf, *oracle.support, limit=200)
    return val


# ---------------------------------------------------------------- oracles

def brute_force_gaussian_mean(model, x_o, grid):
    loglik = np.zeros_like(grid)
    for xi in x_o:
        loglik += stats.norm.logpdf(xi, grid, model.obs_sd)
    log_post = loglik + stats.norm.logpdf(grid, model.prior_mean, model.prior_sd)
    post = np.exp(log_post - log_post.max())
    return post / np.trapezoid(post, grid)


def test_gaussian_mean_closed_form_example():
    # sigma0 = 1, n = 10, xbar = 0.5 -> Normal(10*0.5/11, 1/11)
    model = GaussianMeanModel(prior_sd=1.0, n_obs=10)
    x_o = np.full(10, 0.5)
    oracle = model.true_posterior(x_o)
    assert abs(oracle.mean() - 10 * 0.5 / 11) < 1e-12
    grid = oracle.grid(2000)
    np.testing.assert_allclose(oracle.pdf(grid),
                               brute_force_gaussian_mean(model, x_o, grid),
                               atol=1e-6)


@pytest.mark.parametrize("prior_sd", [0.5, 2.0])
def test_gaussian_mean_oracle_vs_quadrature(prior_sd):
    model = GaussianMeanModel(prior_sd=prior_sd, n_obs=20)
    rng = np.random.default_rng(7)
    for _ in range(10):
        x_o = rng.standard_normal(20)
        oracle = model.true_posterior(x_o)
        grid = oracle.grid(2000)
        bf = brute_force_gaussian_mean(model, x_o, grid)
        assert np.max(np.abs(oracle.pdf(grid) - bf)) < 1e-4


def test_normal_gamma_tau_oracle_vs_quadrature():
    model = NormalGammaModel.from_tau_sd(1.0, n_obs=20)
    rng = np.random.default_rng(11)
    for _ in range(10):
        x_o = rng.standard_normal(20)
        oracle = model.true_posterior(x_o)
        tau_grid = oracle.grid(2000)
        # nested quadrature: integrate the likelihood over mu per tau point
        mu_grid = np.linspace(x_o.mean() - 8, x_o.mean() + 8, 1500)
        log_rows = np.empty((tau_grid.size, mu_grid.size))
        for i, tau in enumerate(tau_grid):
            ll = -0.5 * tau * ((x_o[:, None] - mu_grid[None, :]) ** 2).sum(axis=0)
            ll += 0.5 * model.n_obs * np.log(tau / (2 * np.pi))
            log_rows[i] = ll + stats.norm.logpdf(
                mu_grid, model.mu0, 1.0 / np.sqrt(model.nu0 * tau))
        rows = np.exp(log_rows - log_rows.max())
        lik = np.trapezoid(rows, mu_grid, axis=1)
        post = lik * stats.gamma.pdf(tau_grid, model.alpha0, scale=1 / model.beta0)
        post /= np.trapezoid(post, tau_grid)
        assert np.max(np.abs(oracle.pdf(tau_grid) - post)) < 1e-4


def test_normal_gamma_mu_oracle_vs_quadrature():
    # mean of a Gaussian with unknown precision: Student-t marginal
    model = NormalGammaModel(alpha0=2.0, beta0=50.0, nu0=0.5, n_obs=20,
                             target="mu")
    rng = np.random.default_rng(3)
    for _ in range(5):
        x_o = rng.standard_normal(20) * 5
        oracle = model.true_posterior(x_o)
        mu_grid = oracle.grid(2000)
        tau_ref = stats.gamma(model.alpha0 + model.n_obs / 2,
                              scale=1 / model._posterior_params(
                                  x_o.mean(), ((x_o - x_o.mean()) ** 2).sum())[3])
        tau_grid = np.linspace(tau_ref.ppf(1e-10), tau_ref.ppf(1 - 1e-10), 1500)
        log_rows = np.empty((mu_grid.size, tau_grid.size))
        for i, mu in enumerate(mu_grid):
            ll = (-0.5 * tau_grid * ((x_o - mu) ** 2).sum()
                  + 0.5 * model.n_obs * np.log(tau_grid / (2 * np.pi)))
            prior = (stats.norm.logpdf(mu, model.mu0,
                                       1 / np.sqrt(model.nu0 * tau_grid))
                     + stats.gamma.logpdf(tau_grid, model.alpha0,
                                          scale=1 / model.beta0))
            log_rows[i] = ll + prior
        rows = np.exp(log_rows - log_rows.max())
        post = np.trapezoid(rows, tau_grid, axis=1)
        post /= np.trapezoid(post, mu_grid)
        assert np.max(np.abs(oracle.pdf(mu_grid) - post)) < 1e-4


def test_mixture_oracle_vs_quadrature():
    model = GaussianMixtureMeanModel()
    rng = np.random.default_rng(5)
    for _ in range(10):
        x_o = rng.standard_normal(model.n_obs)
        oracle = model.true_posterior(x_o)
        grid = oracle.grid(2000)
        loglik = np.zeros_like(grid)
        for xi in x_o:
            loglik += stats.norm.logpdf(xi, grid, model.obs_sd)
        prior = np.zeros_like(grid)
        for w, m, s in zip(model.weights, model.means, model.sds):
            prior += w * stats.norm.pdf(grid, m, s)
        post = np.exp(loglik - loglik.max()) * prior
        post /= np.trapezoid(post, grid)
        assert np.max(np.abs(oracle.pdf(grid) - post)) < 1e-4


def test_single_component_mixture_reduces_to_conjugate_normal():
    mix = GaussianMixtureMeanModel(weights=(1.0,), means=(0.0,), sds=(2.0,),
                                   obs_sd=1.0, n_obs=20)
    plain = GaussianMeanModel(prior_sd=2.0, n_obs=20)
    x_o = np.random.default_rng(0).standard_normal(20)
    grid = np.linspace(-3, 3, 200)
    np.testing.assert_allclose(mix.true_posterior(x_o).pdf(grid),
                               plain.true_posterior(x_o).pdf(grid), atol=1e-12)


def test_bivariate_posterior_covariance_identity():
    # Sigma_n = (1/n) Sigma0 (Sigma0 + SigmaX/n)^-1 SigmaX with identity priors
    n = 10
    model = BivariateGaussianMeanModel(n_obs=n)
    x_o = np.random.default_rng(2).standard_normal((n, 2))
    _, sigma_n = model.joint_posterior(x_o)
    expected = np.eye(2) @ np.linalg.inv(np.eye(2) + np.eye(2) / n) @ np.eye(2) / n
    np.testing.assert_allclose(sigma_n, expected, atol=1e-12)


def test_bivariate_marginal_vs_quadrature():
    model = BivariateGaussianMeanModel(n_obs=6)
    rng = np.random.default_rng(9)
    x_o = rng.standard_normal((6, 2))
    oracle = model.true_posterior(x_o)
    g1 = oracle.grid(400)
    g2 = np.linspace(-4, 4, 401)
    m1, m2 = np.meshgrid(g1, g2, indexing="ij")
    loglik = np.zeros_like(m1)
    for row in x_o:
        loglik += (stats.norm.logpdf(row[0], m1, 1.0)
                   + stats.norm.logpdf(row[1], m2, 1.0))
    logprior = stats.norm.logpdf(m1, 0, 1) + stats.norm.logpdf(m2, 0, 1)
    joint = np.exp(loglik + logprior - (loglik + logprior).max())
    marg = np.trapezoid(joint, g2, axis=1)
    marg /= np.trapezoid(marg, g1)
    assert np.max(np.abs(oracle.pdf(g1) - marg)) < 1e-4


@pytest.mark.parametrize("make", [
    lambda: GaussianMeanModel(prior_sd=0.5),
    lambda: GaussianMeanModel(prior_sd=5.0, prior_mean=1.0, obs_sd=0.2, n_obs=5),
    lambda: NormalGammaModel.from_tau_sd(0.5),
    lambda: NormalGammaModel(alpha0=2.0, beta0=50.0, target="mu"),
    lambda: GaussianMixtureMeanModel(),
    lambda: BivariateGaussianMeanModel(),
])
def test_oracle_mass_is_one(make):
    model = make()
    rng = np.random.default_rng(21)
    for _ in range(3):
        theta = model.sample_prior(rng)
        x_o = model.simulate(theta, rng)
        assert abs(quad_mass(model.true_posterior(x_o)) - 1.0) < 1e-6


# ----------------------------------------------------- moments and errors

def test_prior_moments_scenario1():
    model = GaussianMeanModel(prior_sd=0.5)
    draws = model.sample_prior(np.random.default_rng(0), size=N_MC)
    assert abs(draws.mean()) < 3 * 0.5 / np.sqrt(N_MC)


def test_prior_moments_tau():
    model = NormalGammaModel.from_tau_sd(0.7)
    draws = model.sample_prior(np.random.default_rng(1), size=N_MC)
    tau = model.target_of(draws)
    assert abs(tau.mean() - 1.0) < 3 * 0.7 / np.sqrt(N_MC)
    assert abs(tau.std() - 0.7) < 4 * 0.7 / np.sqrt(N_MC)


def test_simulate_moments_scenario1():
    model = GaussianMeanModel(prior_sd=1.0, n_obs=20)
    rng = np.random.default_rng(2)
    mu = 0.37
    data = model.simulate(np.full(N_MC, mu), rng)
    per_dataset_mean = data.mean(axis=1)
    se = 1.0 / np.sqrt(20 * N_MC)
    assert abs(per_dataset_mean.mean() - mu) < 3 * se
    # likelihood variance fixed at 1
    pooled_var = data.var(axis=1, ddof=1).mean()
    assert abs(pooled_var - 1.0) < 0.01


def test_simulate_length_contract():
    model = GaussianMeanModel(prior_sd=1.0, n_obs=2)
    out = model.simulate(0.0, np.random.default_rng(0))
    assert out.shape == (2,)


def test_degenerate_prior_rejected():
    with pytest.raises(ConfigurationError):
        GaussianMeanModel(prior_sd=1e-12)
    with pytest.raises(ConfigurationError):
        GaussianMeanModel(prior_sd=1.0, n_obs=1)
    with pytest.raises(ConfigurationError):
        NormalGammaModel(alpha0=-1.0, beta0=1.0)


def test_nonpositive_precision_domain_error():
    model = NormalGammaModel.from_tau_sd(1.0)
    with pytest.raises(ValueError):
        model.simulate(np.array([0.0, -1.0]), np.random.default_rng(0))


def test_unknown_model_name():
    with pytest.raises(ConfigurationError):
        build_model("no_such_model")


def test_posterior_from_summaries_matches_true_posterior():
    rng = np.random.default_rng(4)
    model = NormalGammaModel.from_tau_sd(1.0, n_obs=20)
    x_o = rng.standard_normal(20)
    a = model.true_posterior(x_o)
    b = model.posterior_from_summaries({"mean": x_o.mean(), "sd": x_o.std()})
    grid = a.grid(200)
    np.testing.assert_allclose(a.pdf(grid), b.pdf(grid), rtol=1e-10)


def test_posterior_from_summaries_missing_stat():
    model = NormalGammaModel.from_tau_sd(1.0)
    with pytest.raises(ConfigurationError):
        model.posterior_from_summaries({"mean": 0.0})
