"""Kernel-backend checks: compiled and NumPy paths must agree, and both must
match naive reference implementations written out loop by loop here."""

import importlib

import numpy as np
import pytest
from scipy import integrate, stats

import lfcde.kernels as kernels

rng = np.random.default_rng(1234)


def naive_conv(nbr, k, h):
    out = np.empty(nbr.shape[0])
    for c in range(nbr.shape[0]):
        s = 0.0
        for i in range(k):
            for j in range(k):
                d = nbr[c, i] - nbr[c, j]
                s += np.exp(-d * d / (4 * h * h))
        out[c] = s / (2 * np.sqrt(np.pi)) / (k * k * h)
    return out


def naive_eval(nbr, t, k, h):
    out = np.empty(nbr.shape[0])
    for c in range(nbr.shape[0]):
        out[c] = np.mean(stats.norm.pdf(t[c], loc=nbr[c, :k], scale=h))
    return out


def test_conv_prefix_matches_naive():
    nbr = rng.normal(size=(6, 15))
    ks = np.array([1, 4, 15])
    hs = np.array([0.25, 1.5])
    got = kernels.conv_prefix(nbr, ks, hs)
    for a, k in enumerate(ks):
        for b, h in enumerate(hs):
            np.testing.assert_allclose(got[:, a, b], naive_conv(nbr, k, h),
                                       rtol=1e-10)


def test_eval_prefix_matches_naive():
    nbr = rng.normal(size=(6, 15))
    t = rng.normal(size=6)
    ks = np.array([2, 15])
    hs = np.array([0.4, 2.0])
    got = kernels.eval_prefix(nbr, t, ks, hs)
    for a, k in enumerate(ks):
        for b, h in enumerate(hs):
            np.testing.assert_allclose(got[:, a, b], naive_eval(nbr, t, k, h),
                                       rtol=1e-10)


def test_kde_loo_matches_naive():
    theta = rng.normal(size=40)
    hs = np.array([0.3, 0.8])
    got = kernels.kde_loo_loglik(theta, hs)
    for b, h in enumerate(hs):
        ll = 0.0
        for i in range(theta.size):
            others = np.delete(theta, i)
            ll += np.log(np.mean(stats.norm.pdf(theta[i], others, h)))
        np.testing.assert_allclose(got[b], ll, rtol=1e-10)


def test_conv_total_matches_prefix():
    theta = rng.normal(size=30)
    h = 0.7
    total = kernels.conv_total(theta, h)
    via_prefix = kernels.conv_prefix(theta[None, :], np.array([30]),
                                     np.array([h]))[0, 0, 0]
    np.testing.assert_allclose(kernels.CONV_NORM * total / (30 * 30 * h),
                               via_prefix, rtol=1e-12)


def test_gaussian_convolution_value_at_zero():
    # integral K(t) K(t - d) dt at d = 0 equals 1/(2 sqrt(pi))
    val, _ = integrate.quad(lambda t: stats.norm.pdf(t) ** 2, -12, 12)
    assert abs(val - kernels.CONV_NORM) < 1e-12
    assert abs(kernels.CONV_NORM - 0.2820947917738781) < 1e-12
    # and the d > 0 form exp(-d^2/4)/(2 sqrt(pi))
    for d in (0.5, 2.0):
        val, _ = integrate.quad(lambda t: stats.norm.pdf(t) * stats.norm.pdf(t - d),
                                -12, 12)
        assert abs(val - kernels.CONV_NORM * np.exp(-d * d / 4)) < 1e-12


def test_conv_prefix_invariant_to_neighbor_order_within_k():
    nbr = rng.normal(size=(3, 10))
    shuffled = nbr.copy()
    shuffled[:, :6] = shuffled[:, np.array([3, 1, 5, 0, 4, 2])]
    a = kernels.conv_prefix(nbr, np.array([6]), np.array([0.5]))
    b = kernels.conv_prefix(shuffled, np.array([6]), np.array([0.5]))
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_grid_validation():
    nbr = rng.normal(size=(3, 5))
    with pytest.raises(ValueError):
        kernels.conv_prefix(nbr, np.array([2, 2]), np.array([0.5]))
    with pytest.raises(ValueError):
        kernels.conv_prefix(nbr, np.array([6]), np.array([0.5]))
    with pytest.raises(ValueError):
        kernels.conv_prefix(nbr, np.array([2]), np.array([-1.0]))


@pytest.mark.skipif(kernels.backend() != "compiled",
                    reason="compiled extension not built")
def test_backends_agree(monkeypatch):
    nbr = rng.normal(size=(11, 40))
    t = rng.normal(size=11)
    theta = rng.normal(size=150)
    ks = np.array([1, 2, 7, 40])
    hs = np.array([0.05, 0.4, 3.0])
    compiled = {
        "conv": kernels.conv_prefix(nbr, ks, hs),
        "eval": kernels.eval_prefix(nbr, t, ks, hs),
        "loo": kernels.kde_loo_loglik(theta, hs),
        "total": kernels.conv_total(theta, 0.3),
    }
    monkeypatch.setenv("LFCDE_DISABLE_EXT", "1")
    importlib.reload(kernels)
    try:
        assert kernels.backend() == "numpy"
        # the compiled path drops kernel terms with exponent > 60 (below
        # double-precision relevance), hence the tiny absolute floor
        np.testing.assert_allclose(kernels.conv_prefix(nbr, ks, hs),
                                   compiled["conv"], rtol=1e-10, atol=1e-20)
        np.testing.assert_allclose(kernels.eval_prefix(nbr, t, ks, hs),
                                   compiled["eval"], rtol=1e-10, atol=1e-20)
        np.testing.assert_allclose(kernels.kde_loo_loglik(theta, hs),
                                   compiled["loo"], rtol=1e-10)
        np.testing.assert_allclose(kernels.conv_total(theta, 0.3),
                                   compiled["total"], rtol=1e-10, atol=1e-20)
    finally:
        monkeypatch.delenv("LFCDE_DISABLE_EXT")
        importlib.reload(kernels)
