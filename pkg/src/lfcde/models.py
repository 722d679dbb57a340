"""Benchmark generative models with samplable priors and closed-form posteriors.

Every model bundles three things: a prior over the parameter, a forward
simulator for datasets of fixed size ``n_obs``, and the analytic posterior
for a scalar target functional.  The analytic posteriors are what make these
models useful as benchmarks: the integrated squared error of any conditional
density estimate can be computed exactly against them.

Scalar draws and batches share one code path: ``sample_prior`` and
``simulate`` accept an optional ``size`` and vectorize over it.
"""

import numpy as np
from scipy import stats

from .errors import ConfigurationError

__all__ = [
    "PosteriorOracle",
    "GaussianMeanModel",
    "NormalGammaModel",
    "GaussianMixtureMeanModel",
    "BivariateGaussianMeanModel",
    "build_model",
    "MODEL_NAMES",
]

# Posterior supports are truncated to these quantiles; finite grids for
# squared-error integration need bounded intervals.  The tails are cut at
# 1e-8 so the truncated density still integrates to 1 within 1e-6.
_SUPPORT_Q = (1e-8, 1.0 - 1e-8)


class PosteriorOracle:
    """Analytic posterior density for a scalar target.

    Represented as a mixture of frozen scipy distributions (a single
    component in the conjugate cases).  ``support`` is the truncated
    interval [q_0.0001, q_0.9999].
    """

    def __init__(self, components, weights=None):
        self._dists = list(components)
        if weights is None:
            weights = np.ones(len(self._dists)) / len(self._dists)
        self.weights = np.asarray(weights, dtype=float)
        if len(self._dists) != self.weights.size:
            raise ValueError("one weight per component required")
        if not np.isclose(self.weights.sum(), 1.0):
            raise ValueError("weights must sum to 1")
        lo = min(d.ppf(_SUPPORT_Q[0]) for d in self._dists)
        hi = max(d.ppf(_SUPPORT_Q[1]) for d in self._dists)
        self.support = (float(lo), float(hi))

    @classmethod
    def from_dist(cls, dist):
        return cls([dist], [1.0])

    def pdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta, dtype=float)
        for w, d in zip(self.weights, self._dists):
            out = out + w * d.pdf(theta)
        return out

    def cdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta, dtype=float)
        for w, d in zip(self.weights, self._dists):
            out = out + w * d.cdf(theta)
        return out

    def mean(self):
        return float(sum(w * d.mean() for w, d in zip(self.weights, self._dists)))

    def grid(self, size=1024):
        return np.linspace(self.support[0], self.support[1], size)

    def squared_integral(self):
        """integral of pdf^2 over the real line.

        Analytic for normal mixtures (Gaussian product identity), trapezoid
        quadrature on a fine grid otherwise.
        """
        if all(isinstance(d.dist, stats._continuous_distns.norm_gen)
               for d in self._dists):
            means = np.array([d.mean() for d in self._dists])
            sds = np.array([d.std() for d in self._dists])
            var = sds[:, None] ** 2 + sds[None, :] ** 2
            cross = np.exp(-0.5 * (means[:, None] - means[None, :]) ** 2 / var)
            cross /= np.sqrt(2.0 * np.pi * var)
            return float(self.weights @ cross @ self.weights)
        grid = self.grid(4096)
        return float(np.trapezoid(self.pdf(grid) ** 2, grid))


def _check_positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise ConfigurationError(f"{name} must be finite and positive, got {value}")
    return float(value)


def _check_n_obs(n_obs):
    n_obs = int(n_obs)
    if n_obs < 2:
        raise ConfigurationError("n_obs must be at least 2")
    return n_obs


class GaussianMeanModel:
    """Infer the mean of a Gaussian with known observation noise.

    Prior: mu ~ Normal(prior_mean, prior_sd^2)
    Data:  X_1..X_n | mu ~ iid Normal(mu, obs_sd^2)

    The posterior is conjugate normal.  With prior_mean = 0 and obs_sd = 1
    this reduces to mean n*xbar*s0^2/(n*s0^2 + 1) and variance
    s0^2/(n*s0^2 + 1).
    """

    name = "gaussian_mean"
    target = "mu"

    def __init__(self, prior_sd, prior_mean=0.0, obs_sd=1.0, n_obs=20):
        # A near-degenerate prior breaks the conjugate formulas downstream.
        if prior_sd < 1e-8:
            raise ConfigurationError(f"prior_sd too small: {prior_sd}")
        self.prior_sd = _check_positive("prior_sd", prior_sd)
        self.prior_mean = float(prior_mean)
        self.obs_sd = _check_positive("obs_sd", obs_sd)
        self.n_obs = _check_n_obs(n_obs)

    def sample_prior(self, rng, size=None):
        return rng.normal(self.prior_mean, self.prior_sd, size=size)

    def simulate(self, theta, rng):
        theta = np.asarray(theta, dtype=float)
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        shape = theta.shape + (self.n_obs,)
        return theta[..., None] + self.obs_sd * rng.standard_normal(shape)

    def target_of(self, theta):
        return np.asarray(theta, dtype=float)

    def _posterior_params(self, xbar):
        prec0 = 1.0 / self.prior_sd**2
        precl = self.n_obs / self.obs_sd**2
        var = 1.0 / (prec0 + precl)
        mean = var * (prec0 * self.prior_mean + precl * xbar)
        return mean, np.sqrt(var)

    def true_posterior(self, x_o):
        x_o = np.asarray(x_o, dtype=float)
        if x_o.shape != (self.n_obs,):
            raise ValueError(f"expected dataset of length {self.n_obs}")
        mean, sd = self._posterior_params(x_o.mean())
        return PosteriorOracle.from_dist(stats.norm(mean, sd))

    def posterior_from_summaries(self, summaries):
        """Posterior oracle from named summary values; requires 'mean'."""
        if "mean" not in summaries:
            raise ConfigurationError("gaussian_mean posterior needs the 'mean' statistic")
        mean, sd = self._posterior_params(summaries["mean"])
        return PosteriorOracle.from_dist(stats.norm(mean, sd))


class NormalGammaModel:
    """Gaussian data with unknown mean and precision, normal-gamma prior.

    Prior: tau ~ Gamma(alpha0, rate beta0); mu | tau ~ Normal(mu0, 1/(nu0 tau))
    Data:  X_1..X_n | (mu, tau) ~ iid Normal(mu, 1/tau)

    ``target`` picks the scalar functional whose posterior is reported:
    'tau' has a Gamma marginal, 'mu' a scaled Student-t marginal.
    """

    name = "normal_gamma"

    def __init__(self, alpha0, beta0, mu0=0.0, nu0=1.0, n_obs=20, target="tau"):
        self.alpha0 = _check_positive("alpha0", alpha0)
        self.beta0 = _check_positive("beta0", beta0)
        self.nu0 = _check_positive("nu0", nu0)
        self.mu0 = float(mu0)
        self.n_obs = _check_n_obs(n_obs)
        if target not in ("tau", "mu"):
            raise ConfigurationError("target must be 'tau' or 'mu'")
        self.target = target

    @classmethod
    def from_tau_sd(cls, tau_sd, **kwargs):
        """Hyperparameters with E[tau] = 1 and SD[tau] = tau_sd.

        E[tau] = alpha0/beta0 and V[tau] = alpha0/beta0^2, so alpha0 = beta0
        = 1/tau_sd^2 is the unique solution.
        """
        alpha0 = 1.0 / _check_positive("tau_sd", tau_sd) ** 2
        return cls(alpha0=alpha0, beta0=alpha0, **kwargs)

    def sample_prior(self, rng, size=None):
        tau = rng.gamma(self.alpha0, 1.0 / self.beta0, size=size)
        mu = rng.normal(self.mu0, 1.0 / np.sqrt(self.nu0 * tau))
        return np.stack([np.asarray(mu), np.asarray(tau)], axis=-1)

    def simulate(self, theta, rng):
        theta = np.asarray(theta, dtype=float)
        mu, tau = theta[..., 0], theta[..., 1]
        if np.any(tau <= 0):
            raise ValueError("precision must be positive")
        shape = mu.shape + (self.n_obs,)
        return mu[..., None] + rng.standard_normal(shape) / np.sqrt(tau)[..., None]

    def target_of(self, theta):
        theta = np.asarray(theta, dtype=float)
        return theta[..., 1] if self.target == "tau" else theta[..., 0]

    def _posterior_params(self, xbar, sum_sq_dev):
        n = self.n_obs
        mu_n = (self.nu0 * self.mu0 + n * xbar) / (self.nu0 + n)
        nu_n = self.nu0 + n
        alpha_n = self.alpha0 + 0.5 * n
        beta_n = (self.beta0 + 0.5 * sum_sq_dev
                  + 0.5 * n * self.nu0 * (xbar - self.mu0) ** 2 / (self.nu0 + n))
        return mu_n, nu_n, alpha_n, beta_n

    def _oracle(self, xbar, sum_sq_dev):
        mu_n, nu_n, alpha_n, beta_n = self._posterior_params(xbar, sum_sq_dev)
        if self.target == "tau":
            dist = stats.gamma(alpha_n, scale=1.0 / beta_n)
        else:
            scale = np.sqrt(beta_n / (alpha_n * nu_n))
            dist = stats.t(df=2.0 * alpha_n, loc=mu_n, scale=scale)
        return PosteriorOracle.from_dist(dist)

    def true_posterior(self, x_o):
        x_o = np.asarray(x_o, dtype=float)
        if x_o.shape != (self.n_obs,):
            raise ValueError(f"expected dataset of length {self.n_obs}")
        xbar = x_o.mean()
        return self._oracle(xbar, ((x_o - xbar) ** 2).sum())

    def posterior_from_summaries(self, summaries):
        """Needs 'mean' and 'sd' (population convention, so n*sd^2 recovers
        the within-sample sum of squares)."""
        if "mean" not in summaries or "sd" not in summaries:
            raise ConfigurationError("normal_gamma posterior needs 'mean' and 'sd'")
        return self._oracle(summaries["mean"], self.n_obs * summaries["sd"] ** 2)


class GaussianMixtureMeanModel:
    """Gaussian-mixture prior on the mean; the posterior is again a mixture.

    Prior: mu ~ sum_i w_i Normal(m_i, s_i^2)
    Data:  X_1..X_n | mu ~ iid Normal(mu, obs_sd^2)

    Each component updates conjugately; the posterior weights are
    w_i* proportional to w_i times the marginal likelihood of xbar under
    component i.  The defaults give a well-separated bimodal posterior.
    """

    name = "gaussian_mixture_mean"
    target = "mu"

    def __init__(self, weights=(0.5, 0.5), means=(-1.0, 1.0), sds=(0.3, 0.3),
                 obs_sd=1.0, n_obs=5):
        self.weights = np.asarray(weights, dtype=float)
        self.means = np.asarray(means, dtype=float)
        self.sds = np.asarray(sds, dtype=float)
        if not (self.weights.shape == self.means.shape == self.sds.shape):
            raise ConfigurationError("weights, means, sds must have equal length")
        if np.any(self.weights <= 0) or not np.isclose(self.weights.sum(), 1.0):
            raise ConfigurationError("weights must be positive and sum to 1")
        if np.any(self.sds <= 0):
            raise ConfigurationError("component sds must be positive")
        self.obs_sd = _check_positive("obs_sd", obs_sd)
        self.n_obs = _check_n_obs(n_obs)

    def sample_prior(self, rng, size=None):
        idx = rng.choice(self.weights.size, size=size, p=self.weights)
        return rng.normal(self.means[idx], self.sds[idx])

    def simulate(self, theta, rng):
        theta = np.asarray(theta, dtype=float)
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        shape = theta.shape + (self.n_obs,)
        return theta[..., None] + self.obs_sd * rng.standard_normal(shape)

    def target_of(self, theta):
        return np.asarray(theta, dtype=float)

    def _posterior(self, xbar):
        n = self.n_obs
        post_prec = 1.0 / self.sds**2 + n / self.obs_sd**2
        post_var = 1.0 / post_prec
        post_mean = post_var * (self.means / self.sds**2 + n * xbar / self.obs_sd**2)
        # marginal likelihood of xbar under each component
        marg_sd = np.sqrt(self.sds**2 + self.obs_sd**2 / n)
        logw = np.log(self.weights) + stats.norm.logpdf(xbar, self.means, marg_sd)
        logw -= logw.max()
        w = np.exp(logw)
        w /= w.sum()
        comps = [stats.norm(m, np.sqrt(v)) for m, v in zip(post_mean, post_var)]
        return PosteriorOracle(comps, w)

    def true_posterior(self, x_o):
        x_o = np.asarray(x_o, dtype=float)
        if x_o.shape != (self.n_obs,):
            raise ValueError(f"expected dataset of length {self.n_obs}")
        return self._posterior(x_o.mean())

    def posterior_from_summaries(self, summaries):
        if "mean" not in summaries:
            raise ConfigurationError("mixture posterior needs the 'mean' statistic")
        return self._posterior(summaries["mean"])


class BivariateGaussianMeanModel:
    """Two-dimensional Gaussian mean with fixed observation covariance.

    Prior: mu ~ Normal(mu0, Sigma0); data X_i ~ Normal(mu, SigmaX).
    The joint posterior is Normal(mu_n, Sigma_n) with

        mu_n    = Sigma0 (Sigma0 + SigmaX/n)^-1 xbar
                  + (SigmaX/n) (Sigma0 + SigmaX/n)^-1 mu0
        Sigma_n = (1/n) Sigma0 (Sigma0 + SigmaX/n)^-1 SigmaX

    The scalar target is one coordinate of mu; its marginal posterior is the
    corresponding normal marginal.
    """

    name = "bivariate_gaussian_mean"

    def __init__(self, prior_mean=(0.0, 0.0), prior_cov=None, obs_cov=None,
                 n_obs=10, target="mu1"):
        self.prior_mean = np.asarray(prior_mean, dtype=float)
        self.prior_cov = np.eye(2) if prior_cov is None else np.asarray(prior_cov, float)
        self.obs_cov = np.eye(2) if obs_cov is None else np.asarray(obs_cov, float)
        for name, cov in (("prior_cov", self.prior_cov), ("obs_cov", self.obs_cov)):
            if cov.shape != (2, 2) or np.any(np.linalg.eigvalsh(cov) <= 0):
                raise ConfigurationError(f"{name} must be 2x2 positive definite")
        self.n_obs = _check_n_obs(n_obs)
        if target not in ("mu1", "mu2"):
            raise ConfigurationError("target must be 'mu1' or 'mu2'")
        self.target = target
        self._tidx = 0 if target == "mu1" else 1

    def sample_prior(self, rng, size=None):
        return rng.multivariate_normal(self.prior_mean, self.prior_cov, size=size)

    def simulate(self, theta, rng):
        theta = np.asarray(theta, dtype=float)
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        shape = theta.shape[:-1] + (self.n_obs, 2)
        noise = rng.multivariate_normal(np.zeros(2), self.obs_cov, size=shape[:-1])
        return theta[..., None, :] + noise

    def target_of(self, theta):
        return np.asarray(theta, dtype=float)[..., self._tidx]

    def joint_posterior(self, x_o):
        """Posterior mean vector and covariance of mu given an (n, 2) dataset."""
        x_o = np.asarray(x_o, dtype=float)
        if x_o.shape != (self.n_obs, 2):
            raise ValueError(f"expected dataset of shape ({self.n_obs}, 2)")
        return self._joint_from_xbar(x_o.mean(axis=0))

    def _joint_from_xbar(self, xbar):
        scaled = self.obs_cov / self.n_obs
        inv = np.linalg.inv(self.prior_cov + scaled)
        mu_n = self.prior_cov @ inv @ xbar + scaled @ inv @ self.prior_mean
        sigma_n = self.prior_cov @ inv @ self.obs_cov / self.n_obs
        # enforce symmetry lost to round-off
        sigma_n = 0.5 * (sigma_n + sigma_n.T)
        return mu_n, sigma_n

    def true_posterior(self, x_o):
        mu_n, sigma_n = self.joint_posterior(x_o)
        i = self._tidx
        return PosteriorOracle.from_dist(stats.norm(mu_n[i], np.sqrt(sigma_n[i, i])))

    def posterior_from_summaries(self, summaries):
        try:
            xbar = np.array([summaries["mean[0]"], summaries["mean[1]"]])
        except KeyError:
            raise ConfigurationError(
                "bivariate posterior needs 'mean[0]' and 'mean[1]'") from None
        mu_n, sigma_n = self._joint_from_xbar(xbar)
        i = self._tidx
        return PosteriorOracle.from_dist(stats.norm(mu_n[i], np.sqrt(sigma_n[i, i])))


_REGISTRY = {
    "gaussian_mean": GaussianMeanModel,
    "normal_gamma": NormalGammaModel,
    "gaussian_mixture_mean": GaussianMixtureMeanModel,
    "bivariate_gaussian_mean": BivariateGaussianMeanModel,
}

MODEL_NAMES = tuple(sorted(_REGISTRY))


def build_model(name, **params):
    """Instantiate a benchmark model by registry name."""
    if name not in _REGISTRY:
        raise ConfigurationError(
            f"unknown model '{name}'; available: {', '.join(MODEL_NAMES)}")
    if name == "normal_gamma" and "tau_sd" in params:
        tau_sd = params.pop("tau_sd")
        if "alpha0" in params or "beta0" in params:
            raise ConfigurationError("give either tau_sd or (alpha0, beta0), not both")
        return NormalGammaModel.from_tau_sd(tau_sd, **params)
    return _REGISTRY[name](**params)
