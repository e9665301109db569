# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled EM loop for latent class models on compressed response patterns.

Same contract as :func:`lcavarsel._em_py.run_em`. Internally the category
axis comes first (K x G) so the per-class inner loops are contiguous, and
the E-step pass accumulates the sufficient statistics of the next M-step.
"""

import numpy as np
from libc.math cimport exp, log, fabs, INFINITY


cdef void _normalize(const long long[::1] offsets, double[::1] mass,
                     double[:, ::1] counts, double[::1] tau,
                     double[:, ::1] theta, double eps) noexcept nogil:
    # counts/mass -> clamped, renormalised theta (K x G) and tau
    cdef Py_ssize_t M = offsets.shape[0] - 1, G = tau.shape[0]
    cdef Py_ssize_t g, m, k, lo, hi
    cdef double total = 0.0, s, v

    for g in range(G):
        total += mass[g]
        for m in range(M):
            lo = offsets[m]
            hi = offsets[m + 1]
            if mass[g] > 0.0:
                s = 0.0
                for k in range(lo, hi):
                    v = counts[k, g] / mass[g]
                    if v < eps:
                        v = eps
                    elif v > 1.0 - eps:
                        v = 1.0 - eps
                    theta[k, g] = v
                    s += v
                for k in range(lo, hi):
                    theta[k, g] /= s
            else:
                for k in range(lo, hi):
                    theta[k, g] = 1.0 / (hi - lo)
    s = 0.0
    for g in range(G):
        v = mass[g] / total
        if v < eps:
            v = eps
        elif v > 1.0 - eps:
            v = 1.0 - eps
        tau[g] = v
        s += v
    for g in range(G):
        tau[g] /= s


cdef double _estep(const int[:, ::1] idx, const double[::1] w,
                   const double[::1] tau, const double[:, ::1] theta,
                   double[:, ::1] logt, double[::1] logtau,
                   double[:, ::1] post, double[::1] mass,
                   double[:, ::1] counts) noexcept nogil:
    # fills post, returns the log-likelihood, and accumulates weighted
    # class masses and category counts for the following M-step
    cdef Py_ssize_t P = idx.shape[0], M = idx.shape[1], G = tau.shape[0]
    cdef Py_ssize_t K = theta.shape[0]
    cdef Py_ssize_t p, g, m, k
    cdef double ll = 0.0, s, mx, v
    cdef double *row

    for k in range(K):
        for g in range(G):
            logt[k, g] = log(theta[k, g])
            counts[k, g] = 0.0
    for g in range(G):
        logtau[g] = log(tau[g])
        mass[g] = 0.0

    for p in range(P):
        row = &post[p, 0]
        for g in range(G):
            row[g] = logtau[g]
        for m in range(M):
            k = idx[p, m]
            for g in range(G):
                row[g] += logt[k, g]
        mx = row[0]
        for g in range(1, G):
            if row[g] > mx:
                mx = row[g]
        s = 0.0
        for g in range(G):
            row[g] = exp(row[g] - mx)
            s += row[g]
        ll += w[p] * (mx + log(s))
        s = 1.0 / s
        for g in range(G):
            row[g] *= s
            v = w[p] * row[g]
            mass[g] += v
        for m in range(M):
            k = idx[p, m]
            for g in range(G):
                counts[k, g] += w[p] * row[g]
    return ll


def run_em(const int[:, ::1] idx, const double[::1] weights,
           const long long[::1] offsets, const double[:, ::1] resp,
           int max_iter, double rel_tol, double eps):
    cdef Py_ssize_t P = idx.shape[0], M = idx.shape[1], G = resp.shape[1]
    cdef Py_ssize_t K = offsets[offsets.shape[0] - 1]
    cdef Py_ssize_t p, g, m
    cdef int it, n_iter = 0
    cdef bint converged = False
    cdef double ll, prev = -INFINITY

    tau_a = np.empty(G)
    theta_a = np.empty((K, G))
    post_a = np.empty((P, G))
    lls_a = np.empty(max(max_iter, 1))
    cdef double[::1] tau = tau_a
    cdef double[:, ::1] theta = theta_a
    cdef double[:, ::1] post = post_a
    cdef double[:, ::1] logt = np.empty((K, G))
    cdef double[:, ::1] counts = np.zeros((K, G))
    cdef double[::1] logtau = np.empty(G)
    cdef double[::1] mass = np.zeros(G)
    cdef double[::1] lls = lls_a

    with nogil:
        for p in range(P):
            for g in range(G):
                mass[g] += resp[p, g]
            for m in range(M):
                for g in range(G):
                    counts[idx[p, m], g] += resp[p, g]
        _normalize(offsets, mass, counts, tau, theta, eps)
        for it in range(max_iter):
            ll = _estep(idx, weights, tau, theta, logt, logtau, post, mass, counts)
            lls[it] = ll
            n_iter = it + 1
            if it > 0 and (ll - prev) / (1.0 + fabs(ll)) < rel_tol:
                converged = True
                break
            prev = ll
            if it == max_iter - 1:
                break
            _normalize(offsets, mass, counts, tau, theta, eps)

    return tau_a, theta_a.T.copy(), post_a, lls_a[:n_iter].copy(), bool(converged)
