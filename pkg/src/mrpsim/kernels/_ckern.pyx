# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of _pykern: truncated-normal kernels for the MCMC inner loop.

Must agree with _pykern to float precision; tests/test_kernels.py checks both.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport erf, erfc, exp, log, sqrt, INFINITY
from scipy.special.cython_special cimport ndtri

cnp.import_array()

cdef double _LOG_SQRT_2PI = 0.9189385332046727
cdef double _INV_SQRT_2 = 0.7071067811865476
cdef double _INV_SQRT_2PI = 0.3989422804014327


cdef inline double _ndtr(double x) noexcept nogil:
    return 0.5 * erfc(-x * _INV_SQRT_2)


cdef inline double _interval_mass(double a, double b) noexcept nogil:
    # Phi(b) - Phi(a) from the nearer tail.
    if a > 0:
        return 0.5 * (erfc(a * _INV_SQRT_2) - erfc(b * _INV_SQRT_2))
    if b < 0:
        return 0.5 * (erfc(-b * _INV_SQRT_2) - erfc(-a * _INV_SQRT_2))
    return 0.5 * (erf(b * _INV_SQRT_2) - erf(a * _INV_SQRT_2))


cdef inline double _row_loglik(double y, double mu, double sigma,
                               double lo, double hi, double log_sigma) noexcept nogil:
    cdef double z, a, b, mass
    if y <= lo or y >= hi:
        return -INFINITY
    z = (y - mu) / sigma
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    mass = _interval_mass(a, b)
    if mass <= 0:
        return -INFINITY
    return -0.5 * z * z - log_sigma - _LOG_SQRT_2PI - log(mass)


def tn_loglik_rows(double[::1] y, double[::1] mu, double sigma,
                   double lo, double hi):
    cdef Py_ssize_t n = y.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef double[::1] ov = out
    cdef double log_sigma = log(sigma)
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            ov[i] = _row_loglik(y[i], mu[i], sigma, lo, hi, log_sigma)
    return out


def tn_loglik_total(double[::1] y, double[::1] mu, double sigma,
                    double lo, double hi):
    cdef Py_ssize_t n = y.shape[0]
    cdef double log_sigma = log(sigma)
    cdef double acc = 0.0
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            acc += _row_loglik(y[i], mu[i], sigma, lo, hi, log_sigma)
    return acc


def group_sums(double[::1] values, int[::1] codes, Py_ssize_t n_levels):
    cdef Py_ssize_t n = values.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n_levels)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            ov[codes[i]] += values[i]
    return out


def tn_loglik_grouped(double[::1] y, double[::1] mu, double sigma,
                      double lo, double hi, int[::1] codes,
                      Py_ssize_t n_levels):
    cdef Py_ssize_t n = y.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n_levels)
    cdef double[::1] ov = out
    cdef double log_sigma = log(sigma)
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            ov[codes[i]] += _row_loglik(y[i], mu[i], sigma, lo, hi, log_sigma)
    return out


def tn_mean(mu, double sigma, double lo, double hi):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mu_arr = np.ascontiguousarray(
        np.atleast_1d(np.asarray(mu, dtype=np.float64)))
    cdef double[::1] mv = mu_arr
    cdef Py_ssize_t n = mu_arr.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef double[::1] ov = out
    cdef double a, b, mass
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            a = (lo - mv[i]) / sigma
            b = (hi - mv[i]) / sigma
            mass = _interval_mass(a, b)
            ov[i] = mv[i] + sigma * (exp(-0.5 * a * a) - exp(-0.5 * b * b)) \
                * _INV_SQRT_2PI / mass
    if np.ndim(mu) == 0:
        return out[0]
    return out


def tn_ppf(double[::1] u, double[::1] mu, double sigma, double lo, double hi):
    cdef Py_ssize_t n = u.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef double[::1] ov = out
    cdef double a, b, pa, pb, x
    cdef bint flip
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            a = (lo - mu[i]) / sigma
            b = (hi - mu[i]) / sigma
            flip = (a + b) > 0
            if flip:
                a, b = -b, -a
            pa = _ndtr(a)
            pb = _ndtr(b)
            if flip:
                x = ndtri(pa + (1.0 - u[i]) * (pb - pa))
                x = -x
            else:
                x = ndtri(pa + u[i] * (pb - pa))
            ov[i] = mu[i] + sigma * x
    return out
