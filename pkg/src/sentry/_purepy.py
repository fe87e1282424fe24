"""Pure numpy implementations of the compiled kernels.

Same signatures and tie/singularity rules as ``_kernels.pyx``. These also
carry the complex-valued pivoting path, which the compiled core does not.
"""
from itertools import combinations, islice
from math import comb

import numpy as np

_CHUNK = 65536


def cost_qr_pivot(V, eta, gamma, p, tie_tol):
    W = np.array(V, copy=True)
    W = W.astype(np.complex128 if np.iscomplexobj(W) else np.float64, copy=False)
    eta = np.asarray(eta, dtype=np.float64)
    r, n = W.shape
    taken = np.zeros(n, dtype=bool)
    pivots = np.empty(p, dtype=np.intp)
    pivot_norms = np.empty(p)
    for k in range(p):
        norms = np.sqrt(np.sum(np.abs(W[k:, :]) ** 2, axis=0))
        score = norms - gamma * eta
        score[taken] = -np.inf
        best = score.max()
        jk = int(np.flatnonzero(score >= best - tie_tol)[0])
        taken[jk] = True
        pivots[k] = jk
        normx = norms[jk]
        pivot_norms[k] = normx
        if normx <= 0.0 or k == r - 1:
            continue
        x = W[k:, jk].copy()
        x0 = x[0]
        if np.iscomplexobj(W):
            phase = x0 / abs(x0) if x0 != 0 else 1.0
            alpha = -phase * normx
        else:
            alpha = -np.copysign(normx, x0)
        x[0] = x0 - alpha
        beta = 2.0 / np.vdot(x, x).real
        cols = ~taken
        block = W[k:, cols]
        block -= beta * np.outer(x, x.conj() @ block)
        W[k:, cols] = block
        W[k, jk] = alpha
        W[k + 1:, jk] = 0.0
    return pivots, pivot_norms


def batched_logdet(G, subsets, rel_tol):
    """Cholesky log-det of ``G[s][:, s]`` for each row ``s`` of ``subsets``."""
    subsets = np.asarray(subsets, dtype=np.intp)
    b, p = subsets.shape
    sub = G[subsets[:, :, None], subsets[:, None, :]]
    L = np.zeros_like(sub)
    ld = np.zeros(b)
    bad = np.zeros(b, dtype=bool)
    for j in range(p):
        diag = sub[:, j, j]
        s = diag - np.sum(L[:, j, :j] ** 2, axis=1)
        bad |= (s <= rel_tol * diag) | (s <= 0.0)
        d = np.sqrt(np.where(bad, 1.0, s))
        L[:, j, j] = d
        ld += 2.0 * np.log(d)
        if j + 1 < p:
            L[:, j + 1:, j] = (
                sub[:, j + 1:, j] - np.einsum("bik,bk->bi", L[:, j + 1:, :j], L[:, j, :j])
            ) / d[:, None]
    ld[bad] = -np.inf
    return ld


def enumerate_logdet(G, p, eta, rel_tol):
    G = np.ascontiguousarray(G, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    n = G.shape[0]
    total = comb(n, p)
    values = np.empty(total)
    costs = np.empty(total)
    it = combinations(range(n), p)
    start = 0
    while start < total:
        size = min(_CHUNK, total - start)
        flat = np.fromiter(
            (i for c in islice(it, size) for i in c), dtype=np.intp, count=size * p
        )
        chunk = flat.reshape(size, p)
        values[start:start + size] = batched_logdet(G, chunk, rel_tol)
        costs[start:start + size] = eta[chunk].sum(axis=1)
        start += size
    return values, costs
