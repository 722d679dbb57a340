# cython: language_level=3
"""Compiled inner loops for Gaussian-kernel sums.

Each function has a NumPy twin in ``lfcde.kernels``; results must agree to
float64 round-off since tests compare the two backends directly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

cdef double GAUSS_NORM = 0.3989422804014327     # 1/sqrt(2*pi)
cdef double CONV_NORM = 0.28209479177387814     # 1/(2*sqrt(pi))


def conv_prefix(double[:, ::1] nbr_theta, long[::1] k_values, double[::1] h_values):
    """Squared integral of a k-nearest-neighbor Gaussian mixture density.

    For each row c (one query point, columns ordered by neighbor rank),
    each cutoff k and bandwidth h:

        out[c, a, b] = (1/(k^2 h)) * sum_{i,j < k} (1/(2 sqrt(pi))) *
                       exp(-(theta_ci - theta_cj)^2 / (4 h^2))

    Prefix sums over k reuse the pairwise terms, so the cost for the whole
    k grid equals the cost of the largest k.
    """
    cdef Py_ssize_t m = nbr_theta.shape[0]
    cdef Py_ssize_t kmax = nbr_theta.shape[1]
    cdef Py_ssize_t nk = k_values.shape[0]
    cdef Py_ssize_t nh = h_values.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.empty((m, nk, nh))
    cdef double[:, :, ::1] ov = out
    cdef Py_ssize_t c, a, b, i, j
    cdef double h, inv4h2, s, row, d, k, arg
    for b in range(nh):
        h = h_values[b]
        inv4h2 = 1.0 / (4.0 * h * h)
        for c in range(m):
            s = 0.0
            a = 0
            for i in range(kmax):
                row = 0.0
                for j in range(i):
                    d = nbr_theta[c, i] - nbr_theta[c, j]
                    arg = d * d * inv4h2
                    if arg < 60.0:  # exp(-60) is below double-precision relevance
                        row += exp(-arg)
                s += 2.0 * row + 1.0
                while a < nk and k_values[a] == i + 1:
                    k = <double> k_values[a]
                    ov[c, a, b] = CONV_NORM * s / (k * k * h)
                    a += 1
    return out


def eval_prefix(double[:, ::1] nbr_theta, double[::1] t, long[::1] k_values,
                double[::1] h_values):
    """Gaussian-mixture density of the first k neighbors, evaluated at t[c].

    out[c, a, b] = (1/(k h)) * sum_{i < k} phi((t_c - theta_ci)/h)
    """
    cdef Py_ssize_t m = nbr_theta.shape[0]
    cdef Py_ssize_t kmax = nbr_theta.shape[1]
    cdef Py_ssize_t nk = k_values.shape[0]
    cdef Py_ssize_t nh = h_values.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.empty((m, nk, nh))
    cdef double[:, :, ::1] ov = out
    cdef Py_ssize_t c, a, b, i
    cdef double h, inv2h2, s, d, arg
    for b in range(nh):
        h = h_values[b]
        inv2h2 = 1.0 / (2.0 * h * h)
        for c in range(m):
            s = 0.0
            a = 0
            for i in range(kmax):
                d = t[c] - nbr_theta[c, i]
                arg = d * d * inv2h2
                if arg < 60.0:
                    s += exp(-arg)
                while a < nk and k_values[a] == i + 1:
                    ov[c, a, b] = GAUSS_NORM * s / (k_values[a] * h)
                    a += 1
    return out


def kde_loo_loglik(double[::1] theta, double[::1] h_values):
    """Leave-one-out log likelihood of a Gaussian KDE, per bandwidth."""
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t nh = h_values.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(nh)
    cdef double[::1] ov = out
    cdef Py_ssize_t b, i, j
    cdef double h, inv2h2, norm, ll, s, d, arg
    for b in range(nh):
        h = h_values[b]
        inv2h2 = 1.0 / (2.0 * h * h)
        norm = GAUSS_NORM / ((n - 1) * h)
        ll = 0.0
        # no exponent cutoff here: the sum feeds a log, so even terms far
        # below 1e-26 change the result
        for i in range(n):
            s = 0.0
            for j in range(n):
                if j != i:
                    d = theta[i] - theta[j]
                    s += exp(-d * d * inv2h2)
            if s < 1e-300:
                s = 1e-300
            ll += log(s * norm)
        ov[b] = ll
    return out


def conv_total(double[::1] theta, double h):
    """Full pairwise convolution sum sum_{i,j} exp(-(ti-tj)^2/(4h^2)).

    Unnormalized; callers divide by n^2 h and multiply by 1/(2 sqrt(pi)).
    """
    cdef Py_ssize_t n = theta.shape[0]
    cdef Py_ssize_t i, j
    cdef double inv4h2 = 1.0 / (4.0 * h * h)
    cdef double s = 0.0
    cdef double row, d, arg
    for i in range(n):
        row = 0.0
        for j in range(i):
            d = theta[i] - theta[j]
            arg = d * d * inv4h2
            if arg < 60.0:
                row += exp(-arg)
        s += 2.0 * row + 1.0
    return s
