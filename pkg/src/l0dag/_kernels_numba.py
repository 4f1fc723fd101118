"""numba-accelerated kernels (preferred backend when numba imports).

Semantics match ``_kernels_numpy`` entry for entry; see that module for the
contract docstrings. Compiled lazily on first call, cached on disk.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _popcount(mask):
    c = 0
    while mask:
        mask &= mask - 1
        c += 1
    return c


@njit(cache=True)
def _compress(mask, j):
    return (mask & ((1 << j) - 1)) | ((mask >> (j + 1)) << j)


@njit(cache=True)
def _chol_inplace(a, k):
    # lower Cholesky of the leading k x k block; False on a bad pivot
    for i in range(k):
        for j in range(i):
            s = a[i, j]
            for t in range(j):
                s -= a[i, t] * a[j, t]
            a[i, j] = s / a[j, j]
        s = a[i, i]
        for t in range(i):
            s -= a[i, t] * a[i, t]
        if not (s > 0.0) or not np.isfinite(s):
            return False
        a[i, i] = np.sqrt(s)
    return True


@njit(cache=True)
def subset_tables(sigma, max_size, zero_tol, coef_threshold, want_stats):
    p = sigma.shape[0]
    width = 1 << (p - 1)
    rss = np.full((p, width), np.inf)
    if want_stats:
        nnz = np.zeros((p, width), dtype=np.int64)
        npass = np.zeros((p, width), dtype=np.int64)
    else:
        nnz = np.zeros((1, 1), dtype=np.int64)
        npass = np.zeros((1, 1), dtype=np.int64)
    for j in range(p):
        rss[j, 0] = sigma[j, j]
    cap = max_size if max_size < p - 1 else p - 1
    if cap < 1 or p == 1:
        return rss, nnz, npass

    idx = np.empty(p, dtype=np.int64)
    sub = np.empty((p, p))
    y = np.empty(p)
    x = np.empty(p)
    total = 1 << p
    for smask in range(1, total):
        k = _popcount(smask)
        if k > cap:
            continue
        c = 0
        for v in range(p):
            if smask & (1 << v):
                idx[c] = v
                c += 1
        for a in range(k):
            ia = idx[a]
            for b in range(k):
                sub[a, b] = sigma[ia, idx[b]]
        ok = _chol_inplace(sub, k)
        if not ok:
            tr = 0.0
            for a in range(k):
                tr += sigma[idx[a], idx[a]]
            ridge = 1e-10 * tr / k
            for a in range(k):
                ia = idx[a]
                for b in range(k):
                    sub[a, b] = sigma[ia, idx[b]]
                sub[a, a] += ridge
            ok = _chol_inplace(sub, k)
        for j in range(p):
            if smask & (1 << j):
                continue
            cidx = _compress(smask, j)
            if not ok:
                rss[j, cidx] = np.nan
                continue
            for a in range(k):
                acc = sigma[idx[a], j]
                for t in range(a):
                    acc -= sub[a, t] * y[t]
                y[a] = acc / sub[a, a]
            for a in range(k - 1, -1, -1):
                acc = y[a]
                for t in range(a + 1, k):
                    acc -= sub[t, a] * x[t]
                x[a] = acc / sub[a, a]
            acc = sigma[j, j]
            for a in range(k):
                acc -= sigma[idx[a], j] * x[a]
            rss[j, cidx] = acc
            if want_stats:
                cn = 0
                cp = 0
                for a in range(k):
                    av = abs(x[a])
                    if av > zero_tol:
                        cn += 1
                    if av > coef_threshold:
                        cp += 1
                nnz[j, cidx] = cn
                npass[j, cidx] = cp
    return rss, nnz, npass


@njit(cache=True)
def best_over_subsets(score, pc, rk):
    p, width = score.shape
    nbits = p - 1
    best = score.copy()
    choice = np.empty((p, width), dtype=np.int64)
    for j in range(p):
        for cidx in range(width):
            choice[j, cidx] = cidx
    for j in range(p):
        for b in range(nbits):
            bit = 1 << b
            for cidx in range(width):
                if cidx & bit:
                    other = cidx ^ bit
                    cv = best[j, other]
                    iv = best[j, cidx]
                    repl = False
                    if cv < iv:
                        repl = True
                    elif cv == iv:
                        co = choice[j, other]
                        ci = choice[j, cidx]
                        if pc[co] < pc[ci] or (
                            pc[co] == pc[ci] and rk[co] > rk[ci]
                        ):
                            repl = True
                    if repl:
                        best[j, cidx] = cv
                        choice[j, cidx] = choice[j, other]
    return best, choice


@njit(cache=True)
def sink_dp(best):
    p = best.shape[0]
    total = 1 << p
    value = np.zeros(total)
    sink = np.full(total, -1, dtype=np.int64)
    for w in range(1, total):
        bv = np.inf
        bs = -1
        for s in range(p):
            if w & (1 << s):
                v = best[s, _compress(w, s)] + value[w ^ (1 << s)]
                if v < bv:
                    bv = v
                    bs = s
        value[w] = bv
        sink[w] = bs
    return value, sink


@njit(cache=True)
def perm_sum(table, perms, tails):
    nperm, p = perms.shape
    out = np.empty(nperm)
    for i in range(nperm):
        acc = 0.0
        for k in range(p):
            j = perms[i, k]
            acc += table[j, _compress(tails[i, k], j)]
        out[i] = acc
    return out


@njit(cache=True)
def perm_max(table, perms, tails):
    nperm, p = perms.shape
    out = np.empty(nperm)
    for i in range(nperm):
        m = -np.inf
        for k in range(p):
            j = perms[i, k]
            v = table[j, _compress(tails[i, k], j)]
            if v > m:
                m = v
        out[i] = m
    return out
