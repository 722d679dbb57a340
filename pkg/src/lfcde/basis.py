"""Orthonormal function bases over a rescaled parameter interval.

The Fourier system on [0, 1]:

    phi_1(u) = 1
    phi_2i(u) = sqrt(2) cos(2 pi i u)
    phi_2i+1(u) = sqrt(2) sin(2 pi i u)

Basis functions are evaluated at u = (theta - a)/(b - a), so parameter values
must live inside the declared range.
"""

import numpy as np

from .errors import ConfigurationError


def padded_range(theta, pad=0.05):
    """Parameter interval covering ``theta`` with symmetric relative padding."""
    theta = np.asarray(theta, dtype=float)
    lo, hi = float(theta.min()), float(theta.max())
    span = hi - lo
    if span <= 0:
        raise ConfigurationError("parameter sample has zero spread")
    return lo - pad * span, hi + pad * span


class FourierBasis:
    """First ``n_terms`` Fourier basis functions on theta_range mapped to [0,1]."""

    family = "fourier"

    def __init__(self, n_terms, theta_range):
        n_terms = int(n_terms)
        if n_terms < 1:
            raise ConfigurationError("n_terms must be at least 1")
        lo, hi = float(theta_range[0]), float(theta_range[1])
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ConfigurationError(f"bad theta_range {theta_range}")
        self.n_terms = n_terms
        self.theta_range = (lo, hi)

    @property
    def width(self):
        return self.theta_range[1] - self.theta_range[0]

    def rescale(self, theta):
        return (np.asarray(theta, dtype=float) - self.theta_range[0]) / self.width

    def design(self, theta):
        """Matrix of shape (len(theta), n_terms) with phi_j(u(theta))."""
        u = np.atleast_1d(self.rescale(theta))
        out = np.empty((u.size, self.n_terms))
        out[:, 0] = 1.0
        for j in range(2, self.n_terms + 1):
            freq = 2.0 * np.pi * (j // 2)
            if j % 2 == 0:
                out[:, j - 1] = np.sqrt(2.0) * np.cos(freq * u)
            else:
                out[:, j - 1] = np.sqrt(2.0) * np.sin(freq * u)
        return out
