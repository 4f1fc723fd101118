"""Shared test fixtures and independent oracles.

Everything here is deliberately written against numpy/itertools directly
(no package kernels), so tests compare the library to independent
re-derivations rather than to itself.
"""

import itertools

import numpy as np


def rand_spd(rng, p, n_factor=4):
    """A well-conditioned random SPD matrix (sample covariance of a draw)."""
    A = rng.normal(size=(n_factor * p + 2, p))
    return A.T @ A / A.shape[0]


def oracle_rss(S, j, parents):
    """RSS(j | parents) straight from the normal equations."""
    idx = list(parents)
    if not idx:
        return float(S[j, j])
    sub = S[np.ix_(idx, idx)]
    rhs = S[idx, j]
    coef = np.linalg.solve(sub, rhs)
    return float(S[j, j] - rhs @ coef)


def oracle_coef(S, j, parents):
    idx = list(parents)
    if not idx:
        return np.zeros(0)
    return np.linalg.solve(S[np.ix_(idx, idx)], S[idx, j])


def oracle_local_score(S, j, parents, lam2, mode):
    rss = oracle_rss(S, j, parents)
    if mode == "profile":
        return 1.0 + np.log(rss) + lam2 * len(parents)
    return rss + lam2 * len(parents)


def is_acyclic(parent_sets):
    """Kahn's algorithm on parent lists, written from scratch."""
    p = len(parent_sets)
    children = [[] for _ in range(p)]
    indeg = [0] * p
    for j, S in enumerate(parent_sets):
        indeg[j] = len(S)
        for k in S:
            children[k].append(j)
    queue = [v for v in range(p) if indeg[v] == 0]
    seen = 0
    while queue:
        v = queue.pop()
        seen += 1
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    return seen == p


def all_dags(p, max_parents=None):
    """Every DAG on p nodes as a tuple of parent tuples, by enumeration."""
    cap = p - 1 if max_parents is None else max_parents
    per_node = []
    for j in range(p):
        others = [k for k in range(p) if k != j]
        sets = []
        for r in range(cap + 1):
            sets.extend(itertools.combinations(others, r))
        per_node.append(sets)
    dags = []
    for combo in itertools.product(*per_node):
        if is_acyclic(combo):
            dags.append(combo)
    return dags


def brute_min_score(S, lam2, mode, max_parents):
    """Minimum penalized score over every DAG within the in-degree cap."""
    best = np.inf
    for dag in all_dags(S.shape[0], max_parents):
        total = sum(
            oracle_local_score(S, j, dag[j], lam2, mode) for j in range(len(dag))
        )
        if total < best:
            best = total
    return best


def oracle_gs(S, order):
    """Per-node regressions along an ordering (children first).

    Returns (B, omega) with each node regressed on all nodes after it in
    the ordering, using plain solves.
    """
    p = S.shape[0]
    B = np.zeros((p, p))
    omega = np.zeros(p)
    for pos, j in enumerate(order):
        parents = list(order[pos + 1:])
        coef = oracle_coef(S, j, parents)
        B[parents, j] = coef
        omega[j] = oracle_rss(S, j, parents)
    return B, omega


def vstructures(parent_sets):
    """Set of (a, c, b) colliders a -> c <- b with a, b non-adjacent, a < b."""
    p = len(parent_sets)
    adj = set()
    for j, S in enumerate(parent_sets):
        for k in S:
            adj.add((j, k))
            adj.add((k, j))
    out = set()
    for c in range(p):
        pa = sorted(parent_sets[c])
        for i in range(len(pa)):
            for k in range(i + 1, len(pa)):
                if (pa[i], pa[k]) not in adj:
                    out.add((pa[i], c, pa[k]))
    return out


def skeleton_of(parent_sets):
    out = set()
    for j, S in enumerate(parent_sets):
        for k in S:
            out.add(frozenset((j, k)))
    return out
