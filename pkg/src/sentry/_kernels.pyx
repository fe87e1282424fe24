# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: the real-valued cost-penalized pivoted QR sweep and
brute-force log-det enumeration over all p-subsets of a Gramian.

Both functions mirror the signatures in ``sentry._purepy`` exactly; the
package picks one implementation at import time (see ``sentry._backend``).
"""
import numpy as np

from libc.math cimport sqrt, log, copysign, INFINITY


def cost_qr_pivot(V, eta, double gamma, Py_ssize_t p, double tie_tol):
    cdef double[:, ::1] W = np.array(V, dtype=np.float64, order="C", copy=True)
    cdef const double[::1] e = np.ascontiguousarray(eta, dtype=np.float64)
    cdef Py_ssize_t r = W.shape[0], n = W.shape[1]
    cdef Py_ssize_t i, j, k, jk
    cdef double best, s, normx, x0, alpha, vnorm2, beta, acc

    taken_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] taken = taken_arr
    cdef double[::1] nrm = np.empty(n)
    cdef double[::1] hv = np.empty(r)
    cdef double[::1] dots = np.empty(n)
    pivots = np.empty(p, dtype=np.intp)
    pivot_norms = np.empty(p)
    cdef Py_ssize_t[::1] piv = pivots
    cdef double[::1] pn = pivot_norms

    for k in range(p):
        for j in range(n):
            nrm[j] = 0.0
        for i in range(k, r):
            for j in range(n):
                if not taken[j]:
                    nrm[j] += W[i, j] * W[i, j]
        best = -INFINITY
        for j in range(n):
            if not taken[j]:
                nrm[j] = sqrt(nrm[j])
                s = nrm[j] - gamma * e[j]
                if s > best:
                    best = s
        jk = -1
        for j in range(n):
            if not taken[j] and nrm[j] - gamma * e[j] >= best - tie_tol:
                jk = j
                break
        taken[jk] = 1
        piv[k] = jk
        normx = nrm[jk]
        pn[k] = normx
        if normx <= 0.0 or k == r - 1:
            continue
        # Householder reflector sending W[k:, jk] to alpha * e_1
        x0 = W[k, jk]
        alpha = -copysign(normx, x0)
        vnorm2 = 0.0
        for i in range(k, r):
            hv[i] = W[i, jk]
        hv[k] = x0 - alpha
        for i in range(k, r):
            vnorm2 += hv[i] * hv[i]
        beta = 2.0 / vnorm2
        for j in range(n):
            dots[j] = 0.0
        for i in range(k, r):
            for j in range(n):
                if not taken[j]:
                    dots[j] += hv[i] * W[i, j]
        for i in range(k, r):
            acc = beta * hv[i]
            for j in range(n):
                if not taken[j]:
                    W[i, j] -= acc * dots[j]
        W[k, jk] = alpha
        for i in range(k + 1, r):
            W[i, jk] = 0.0
    return pivots, pivot_norms


def enumerate_logdet(G, Py_ssize_t p, eta, double rel_tol):
    cdef const double[:, ::1] g = np.ascontiguousarray(G, dtype=np.float64)
    cdef const double[::1] e = np.ascontiguousarray(eta, dtype=np.float64)
    cdef Py_ssize_t n = g.shape[0]
    cdef Py_ssize_t total = _comb(n, p)
    values_arr = np.empty(total)
    costs_arr = np.empty(total)
    cdef double[::1] values = values_arr
    cdef double[::1] costs = costs_arr
    cdef Py_ssize_t[::1] idx = np.arange(p, dtype=np.intp)
    cdef double[:, ::1] L = np.zeros((p, p))
    cdef Py_ssize_t count = 0, i, j, q
    cdef double s, d, ld, c
    cdef bint singular

    if total == 0:
        return values_arr, costs_arr
    while True:
        ld = 0.0
        singular = False
        for j in range(p):
            s = g[idx[j], idx[j]]
            for q in range(j):
                s -= L[j, q] * L[j, q]
            if s <= rel_tol * g[idx[j], idx[j]] or s <= 0.0:
                singular = True
                break
            d = sqrt(s)
            L[j, j] = d
            ld += 2.0 * log(d)
            for i in range(j + 1, p):
                s = g[idx[i], idx[j]]
                for q in range(j):
                    s -= L[i, q] * L[j, q]
                L[i, j] = s / d
        values[count] = -INFINITY if singular else ld
        c = 0.0
        for j in range(p):
            c += e[idx[j]]
        costs[count] = c
        count += 1
        i = p - 1
        while i >= 0 and idx[i] == n - p + i:
            i -= 1
        if i < 0:
            break
        idx[i] += 1
        for j in range(i + 1, p):
            idx[j] = idx[j - 1] + 1
    return values_arr, costs_arr


cdef Py_ssize_t _comb(Py_ssize_t n, Py_ssize_t k):
    cdef Py_ssize_t out = 1, i
    if k < 0 or k > n:
        return 0
    for i in range(min(k, n - k)):
        out = out * (n - i) // (i + 1)
    return out
