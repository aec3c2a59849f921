# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Fused transform + reduction kernels for the Monte Carlo trial loop.

Same contract as the numpy fallback but without intermediate (trials, n)
temporaries; loops run under nogil so a thread pool scales.
"""

from libc.math cimport fabs, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def metric_reduce(double[:, ::1] z, double[::1] mu, double[::1] sigma,
                  double[::1] pi, int kind, double[::1] out):
    cdef Py_ssize_t trials = z.shape[0]
    cdef Py_ssize_t n = z.shape[1]
    cdef Py_ssize_t j, i
    cdef double acc, d
    if mu.shape[0] != n or sigma.shape[0] != n or pi.shape[0] != n:
        raise ValueError("parameter arrays must match z's second dimension")
    if out.shape[0] != trials:
        raise ValueError("out must match z's first dimension")
    if kind < 0 or kind > 2:
        raise ValueError(f"unknown metric kind {kind}")
    with nogil:
        for j in range(trials):
            acc = 0.0
            if kind == 0:
                for i in range(n):
                    d = pi[i] - (mu[i] + sigma[i] * z[j, i])
                    acc += d * d
                out[j] = sqrt(acc / n)
            elif kind == 1:
                for i in range(n):
                    d = pi[i] - (mu[i] + sigma[i] * z[j, i])
                    acc += fabs(d)
                out[j] = acc / n
            else:
                for i in range(n):
                    acc += pi[i] - (mu[i] + sigma[i] * z[j, i])
                out[j] = acc / n


def filtered_reduce(double[:, ::1] z, double[::1] mu, double[::1] sigma,
                    double[::1] pi, double[::1] halfwidth, double[::1] out):
    cdef Py_ssize_t trials = z.shape[0]
    cdef Py_ssize_t n = z.shape[1]
    cdef Py_ssize_t j, i, kept
    cdef double acc, d
    if (mu.shape[0] != n or sigma.shape[0] != n or pi.shape[0] != n
            or halfwidth.shape[0] != n):
        raise ValueError("parameter arrays must match z's second dimension")
    if out.shape[0] != trials:
        raise ValueError("out must match z's first dimension")
    with nogil:
        for j in range(trials):
            acc = 0.0
            kept = 0
            for i in range(n):
                d = pi[i] - (mu[i] + sigma[i] * z[j, i])
                if fabs(d) > halfwidth[i]:
                    acc += d * d
                    kept += 1
            out[j] = sqrt(acc / kept) if kept > 0 else 0.0
