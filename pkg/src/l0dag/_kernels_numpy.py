"""Pure-numpy kernel implementations (fallback backend).

Same signatures and semantics as ``_kernels_numba``; selected via the
L0DAG_BACKEND environment variable or ``l0dag.use_backend``.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ._subsets import compress_array, popcounts

_RIDGE_SCALE = 1e-10


def subset_tables(sigma, max_size, zero_tol, coef_threshold, want_stats):
    """Regression tables over all parent sets S with ``|S| <= max_size``.

    Returns (rss, nnz, npass) arrays of shape (p, 2**(p-1)) indexed by
    (child j, compressed mask of S). rss entries for |S| > max_size are
    +inf; entries whose normal-equation solve fails even after a ridge
    retry are NaN. nnz counts coefficients with |b| > zero_tol, npass
    counts |b| > coef_threshold. When ``want_stats`` is false the integer
    tables are 1x1 dummies.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    p = sigma.shape[0]
    width = 1 << (p - 1) if p > 1 else 1
    rss = np.full((p, width), np.inf)
    if want_stats:
        nnz = np.zeros((p, width), dtype=np.int64)
        npass = np.zeros((p, width), dtype=np.int64)
    else:
        nnz = np.zeros((1, 1), dtype=np.int64)
        npass = np.zeros((1, 1), dtype=np.int64)

    rss[:, 0] = np.diag(sigma)
    all_nodes = np.arange(p)
    for k in range(1, min(max_size, p - 1) + 1):
        for combo in itertools.combinations(range(p), k):
            idx = np.asarray(combo, dtype=np.int64)
            smask = np.int64(0)
            for v in combo:
                smask |= np.int64(1) << np.int64(v)
            sub = sigma[np.ix_(idx, idx)]
            rhs = sigma[idx, :]
            coefs = _solve_spd(sub, rhs, k)
            out = np.setdiff1d(all_nodes, idx, assume_unique=True)
            cidx = compress_array(np.full(out.shape, smask), out)
            if coefs is None:
                rss[out, cidx] = np.nan
                continue
            vals = np.diag(sigma)[out] - np.einsum(
                "ij,ij->j", rhs[:, out], coefs[:, out]
            )
            rss[out, cidx] = vals
            if want_stats:
                nnz[out, cidx] = (np.abs(coefs[:, out]) > zero_tol).sum(axis=0)
                npass[out, cidx] = (np.abs(coefs[:, out]) > coef_threshold).sum(
                    axis=0
                )
    return rss, nnz, npass


def _solve_spd(sub, rhs, k):
    """Cholesky solve with one ridge retry; None when both attempts fail."""
    try:
        return cho_solve(cho_factor(sub, lower=True), rhs)
    except LinAlgError:
        pass
    ridge = _RIDGE_SCALE * np.trace(sub) / k
    try:
        return cho_solve(cho_factor(sub + ridge * np.eye(k), lower=True), rhs)
    except LinAlgError:
        return None


def best_over_subsets(score, pc, rk):
    """Per-node minimum of ``score`` over all subsets of each candidate mask.

    Ties break toward smaller cardinality, then toward the lexicographically
    smallest node set (largest bit-reversal key). Returns (best, choice)
    with ``choice`` holding the winning compressed mask.
    """
    score = np.asarray(score, dtype=np.float64)
    p, width = score.shape
    nbits = p - 1
    best = score.copy()
    choice = np.tile(np.arange(width, dtype=np.int64), (p, 1))
    idx = np.arange(width, dtype=np.int64)
    for b in range(nbits):
        bit = np.int64(1) << np.int64(b)
        sel = (idx & bit) != 0
        other = idx[sel] ^ bit
        for j in range(p):
            cv = best[j, other]
            iv = best[j, sel]
            co = choice[j, other]
            ci = choice[j, sel]
            repl = (cv < iv) | (
                (cv == iv)
                & (
                    (pc[co] < pc[ci])
                    | ((pc[co] == pc[ci]) & (rk[co] > rk[ci]))
                )
            )
            best[j, sel] = np.where(repl, cv, iv)
            choice[j, sel] = np.where(repl, co, ci)
    return best, choice


def sink_dp(best):
    """Subset DP: value[W] = min over sinks s in W of best[s, W-s] + value[W-s].

    Ties keep the smallest sink index. Returns (value, sink) over all
    2**p node subsets; sink[0] = -1.
    """
    best = np.asarray(best, dtype=np.float64)
    p = best.shape[0]
    total = 1 << p
    value = np.zeros(total)
    sink = np.full(total, -1, dtype=np.int64)
    masks = np.arange(total, dtype=np.int64)
    pcs = popcounts(total)
    for card in range(1, p + 1):
        layer = masks[pcs == card]
        bv = np.full(layer.shape, np.inf)
        bs = np.full(layer.shape, -1, dtype=np.int64)
        for s in range(p):
            bit = np.int64(1) << np.int64(s)
            has = (layer & bit) != 0
            sub = layer[has]
            if sub.size == 0:
                continue
            cand = best[s, compress_array(sub, s)] + value[sub ^ bit]
            cur_v = bv[has]
            cur_s = bs[has]
            better = cand < cur_v
            cur_v[better] = cand[better]
            cur_s[better] = s
            bv[has] = cur_v
            bs[has] = cur_s
        value[layer] = bv
        sink[layer] = bs
    return value, sink


def perm_sum(table, perms, tails):
    """Sum of table[pi_k, compress(tail_k, pi_k)] over positions k, per row."""
    c = compress_array(tails, perms)
    return table[perms, c].sum(axis=1)


def perm_max(table, perms, tails):
    """Max of table[pi_k, compress(tail_k, pi_k)] over positions k, per row."""
    c = compress_array(tails, perms)
    return table[perms, c].max(axis=1)
