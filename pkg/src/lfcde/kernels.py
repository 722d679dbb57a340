"""Gaussian-kernel inner loops with a compiled core and a NumPy fallback.

The compiled extension (``lfcde._corekernels``) is preferred when it imported
cleanly; otherwise the NumPy implementations below are used.  Setting the
environment variable ``LFCDE_DISABLE_EXT=1`` before import forces the NumPy
path (used by the benchmark script and the backend-equality tests).

All routines work with Gaussian kernels.  Two constants show up throughout:
``1/sqrt(2 pi)`` normalizes the kernel itself and ``1/(2 sqrt(pi))`` is the
self-convolution value ``integral K(t) K(t - d) dt`` at ``d = 0``.
"""

import os

import numpy as np

GAUSS_NORM = 1.0 / np.sqrt(2.0 * np.pi)
CONV_NORM = 1.0 / (2.0 * np.sqrt(np.pi))

# Rough element budget for temporary pairwise blocks (~32 MB of float64).
_CHUNK_BUDGET = 4_000_000

try:  # pragma: no cover - exercised indirectly via backend tests
    if os.environ.get("LFCDE_DISABLE_EXT"):
        _core = None
    else:
        from . import _corekernels as _core
except ImportError:  # pragma: no cover
    _core = None


def backend() -> str:
    """Name of the active backend: 'compiled' or 'numpy'."""
    return "compiled" if _core is not None else "numpy"


def _as_grids(nbr_theta, k_values, h_values):
    nbr_theta = np.ascontiguousarray(nbr_theta, dtype=np.float64)
    k_values = np.ascontiguousarray(k_values, dtype=np.int64)
    h_values = np.ascontiguousarray(h_values, dtype=np.float64)
    if nbr_theta.ndim != 2:
        raise ValueError("nbr_theta must be 2-D (points x neighbors)")
    if k_values.size == 0 or h_values.size == 0:
        raise ValueError("empty k or h grid")
    if np.any(np.diff(k_values) <= 0):
        raise ValueError("k grid must be strictly increasing")
    if k_values[0] < 1 or k_values[-1] > nbr_theta.shape[1]:
        raise ValueError("k grid outside [1, n_neighbors]")
    if np.any(h_values <= 0):
        raise ValueError("bandwidths must be positive")
    return nbr_theta, k_values, h_values


def conv_prefix(nbr_theta, k_values, h_values):
    """Squared integral of the k-nearest-neighbor Gaussian mixture density.

    Parameters
    ----------
    nbr_theta : (m, kmax) array
        Response values of the neighbors of each query point, ordered by
        neighbor rank (closest first).
    k_values : increasing int array
        Neighbor-count cutoffs to report.
    h_values : positive float array
        Kernel bandwidths.

    Returns
    -------
    (m, len(k_values), len(h_values)) array with
    ``(1/(k^2 h)) sum_{i,j<k} (1/(2 sqrt(pi))) exp(-(t_i-t_j)^2/(4h^2))``.

    The pairwise terms for cutoff k are a superset of those for any smaller
    cutoff, so one pass over the largest k serves the whole grid.
    """
    nbr_theta, k_values, h_values = _as_grids(nbr_theta, k_values, h_values)
    if _core is not None:
        return _core.conv_prefix(nbr_theta, k_values, h_values)
    m, kmax = nbr_theta.shape
    out = np.empty((m, k_values.size, h_values.size))
    chunk = max(1, _CHUNK_BUDGET // (kmax * kmax))
    kf = k_values.astype(np.float64)
    for lo in range(0, m, chunk):
        hi = min(m, lo + chunk)
        block = nbr_theta[lo:hi]
        d2 = (block[:, :, None] - block[:, None, :]) ** 2
        for b, h in enumerate(h_values):
            e = np.exp(d2 * (-0.25 / (h * h)))
            prefix = np.cumsum(np.cumsum(e, axis=1), axis=2)
            s = prefix[:, k_values - 1, k_values - 1]
            out[lo:hi, :, b] = CONV_NORM * s / (kf * kf * h)
    return out


def eval_prefix(nbr_theta, t, k_values, h_values):
    """Density of the first-k-neighbors Gaussian mixture at one point per row.

    Returns an (m, nk, nh) array of
    ``(1/(k h)) sum_{i<k} phi((t_c - theta_ci)/h)``.
    """
    nbr_theta, k_values, h_values = _as_grids(nbr_theta, k_values, h_values)
    t = np.ascontiguousarray(t, dtype=np.float64)
    if t.shape != (nbr_theta.shape[0],):
        raise ValueError("t must have one entry per row of nbr_theta")
    if _core is not None:
        return _core.eval_prefix(nbr_theta, t, k_values, h_values)
    d2 = (t[:, None] - nbr_theta) ** 2
    out = np.empty((nbr_theta.shape[0], k_values.size, h_values.size))
    kf = k_values.astype(np.float64)
    for b, h in enumerate(h_values):
        c = np.cumsum(np.exp(d2 * (-0.5 / (h * h))), axis=1)
        out[:, :, b] = GAUSS_NORM * c[:, k_values - 1] / (kf * h)
    return out


def kde_loo_loglik(theta, h_values):
    """Leave-one-out log likelihood of a Gaussian KDE for each bandwidth."""
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    h_values = np.ascontiguousarray(h_values, dtype=np.float64)
    if np.any(h_values <= 0):
        raise ValueError("bandwidths must be positive")
    if _core is not None:
        return _core.kde_loo_loglik(theta, h_values)
    n = theta.size
    out = np.zeros(h_values.size)
    chunk = max(1, _CHUNK_BUDGET // n)
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        d2 = (theta[lo:hi, None] - theta[None, :]) ** 2
        # mask the self term; subtracting it after the sum would cancel
        # catastrophically when all true neighbor terms are tiny
        d2[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        for b, h in enumerate(h_values):
            s = np.exp(d2 * (-0.5 / (h * h))).sum(axis=1)
            s = np.maximum(s, 1e-300)
            out[b] += np.log(s * (GAUSS_NORM / ((n - 1) * h))).sum()
    return out


def conv_total(theta, h):
    """Full pairwise sum ``sum_{i,j} exp(-(ti-tj)^2/(4h^2))`` (unnormalized)."""
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    if _core is not None:
        return _core.conv_total(theta, float(h))
    n = theta.size
    total = 0.0
    chunk = max(1, _CHUNK_BUDGET // n)
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        d2 = (theta[lo:hi, None] - theta[None, :]) ** 2
        total += float(np.exp(d2 * (-0.25 / (h * h))).sum())
    return total


def gauss_mixture_pdf(centers, query, h):
    """Mean of Gaussian densities N(center, h^2) evaluated at query points."""
    centers = np.asarray(centers, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    scalar = query.ndim == 0
    q = np.atleast_1d(query)
    out = np.zeros(q.shape, dtype=np.float64)
    chunk = max(1, _CHUNK_BUDGET // max(1, centers.size))
    for lo in range(0, q.size, chunk):
        hi = min(q.size, lo + chunk)
        d2 = (q[lo:hi, None] - centers[None, :]) ** 2
        out[lo:hi] = np.exp(d2 * (-0.5 / (h * h))).mean(axis=1)
    out *= GAUSS_NORM / h
    return float(out[0]) if scalar else out
