"""Penalized-score minimization over DAGs: exact subset DP and greedy climbs.

The exact solver runs the classic sink dynamic program over node subsets
on a precomputed best-parent table, so it is globally optimal within the
in-degree cap but exponential in p. The greedy solver hill-climbs in DAG
space with add/delete/reverse moves and is the only option past the table
limit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _subsets
from ._backend import kernels
from ._linalg import regress
from .errors import NumericalError
from .model import CovarianceMatrix, DagModel, Ordering, topological_order
from .scoring import (
    NEGATIVE_RSS_TOL,
    LocalScoreTable,
    default_max_parents,
    variance_floor,
)

# an improvement smaller than this is treated as round-off, not a move
IMPROVE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FitResult:
    """A fitted model with its score and bookkeeping.

    ``score`` is the sum of ``node_scores``; ``s_hat`` counts the chosen
    parent sets (coefficients that refit to exactly zero still count);
    ``pi_hat`` is the lexicographically smallest ordering under which the
    coefficient matrix is lower-diagonal.
    """

    model: DagModel
    score: float
    s_hat: int
    pi_hat: Ordering
    method: str
    node_scores: np.ndarray

    def to_dict(self) -> dict:
        """JSON form: {model, score, s_hat, pi_hat, method}, 1-based."""
        return {
            "model": self.model.to_dict(),
            "score": self.score,
            "s_hat": self.s_hat,
            "pi_hat": list(self.pi_hat.to_one_based()),
            "method": self.method,
        }


def refit_parameters(structure, sigma_hat: CovarianceMatrix, mode: str = "profile") -> DagModel:
    """Least-squares coefficients and noise variances on a fixed structure.

    ``structure`` lists each node's parent set (0-based). Column j of the
    returned B is (Sigma_SS)^-1 Sigma_Sj on S_j; omega_j is the residual
    variance in profile mode (clamped below by the variance floor) and 1 in
    equal-variance mode.
    """
    p = sigma_hat.p
    parents = _validated_structure(structure, p)
    B = np.zeros((p, p))
    omega = np.ones(p)
    floor = variance_floor(sigma_hat)
    for j in range(p):
        idx = parents[j]
        if idx.size:
            coef, rss = regress(sigma_hat.matrix, j, idx)
            B[idx, j] = coef
        else:
            rss = float(sigma_hat.matrix[j, j])
        if mode == "profile":
            omega[j] = max(rss, floor)
    return DagModel(B=B, omega=omega)


def _validated_structure(structure, p: int) -> list[np.ndarray]:
    parents = []
    if len(structure) != p:
        raise ValueError(f"structure lists {len(structure)} parent sets for p={p}")
    support = np.zeros((p, p))
    for j, S in enumerate(structure):
        idx = sorted({int(v) for v in S})
        if any(v < 0 or v >= p for v in idx):
            raise ValueError(f"parent set of node {j + 1} is out of range: {idx}")
        if j in idx:
            raise ValueError(f"parent set of node {j + 1} contains itself")
        support[idx, j] = 1.0
        parents.append(np.asarray(idx, dtype=np.intp))
    topological_order(support)  # rejects cyclic structures
    return parents


def fit_exact(table: LocalScoreTable) -> FitResult:
    """Globally optimal DAG under the table's score and in-degree cap.

    value(W) = min over sinks s in W of best(s, W - {s}) + value(W - {s}),
    ties to the smallest-index sink. Two arrays of size 2^p.
    """
    p = table.p
    kern = kernels()
    value, sink = kern.sink_dp(table.best)
    full = (1 << p) - 1
    parents: list[tuple[int, ...]] = [()] * p
    node_scores = np.zeros(p)
    W = full
    while W:
        s = int(sink[W])
        rest = W & ~(1 << s)
        sc, S = table.best_for(s, rest)
        parents[s] = S
        node_scores[s] = sc
        W = rest
    return _finish(parents, node_scores, table.sigma, table.mode, "exact")


def fit_greedy(
    sigma_hat: CovarianceMatrix,
    n: int | None = None,
    lambda2: float = 0.0,
    mode: str = "profile",
    max_parents: int | None = None,
    restarts: int = 0,
    seed: int = 0,
) -> FitResult:
    """Steepest-descent hill climb over single-edge add/delete/reverse moves.

    Run 0 starts from the empty graph; runs 1..restarts seed a random
    ordering, greedily forward-select parents along it, then descend. The
    best local minimum wins (ties to the earlier run). Deterministic for a
    fixed seed.
    """
    p = sigma_hat.p
    if p < 2:
        raise ValueError(f"need p >= 2, got p={p}")
    if lambda2 < 0:
        raise ValueError(f"lambda2 must be >= 0, got {lambda2}")
    if mode not in ("profile", "equalvar"):
        raise ValueError(f"mode must be 'profile' or 'equalvar', got {mode!r}")
    if restarts < 0:
        raise ValueError(f"restarts must be >= 0, got {restarts}")
    if n is None:
        n = sigma_hat.n
    if max_parents is None:
        m = default_max_parents(sigma_hat, n)
    else:
        m = min(int(max_parents), p - 1)
        if m < 0:
            raise ValueError(f"max_parents must be >= 0, got {max_parents}")

    score_of = _score_cache(sigma_hat, lambda2, mode)
    best_masks: list[int] | None = None
    best_total = np.inf
    for run in range(restarts + 1):
        if run == 0:
            masks = [0] * p
        else:
            rng = np.random.Generator(
                np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(run,)))
            )
            order = [int(v) for v in rng.permutation(p)]
            masks = _forward_select(order, m, score_of)
        masks = _steepest_descent(masks, m, score_of)
        total = float(np.sum([score_of(j, masks[j]) for j in range(p)]))
        if total < best_total - IMPROVE_TOL:
            best_total = total
            best_masks = masks

    assert best_masks is not None
    parents = [_subsets.nodes_of(mask) for mask in best_masks]
    node_scores = np.array([score_of(j, best_masks[j]) for j in range(p)])
    return _finish(parents, node_scores, sigma_hat, mode, "greedy")


def _finish(parents, node_scores, sigma_hat, mode, method) -> FitResult:
    model = refit_parameters(parents, sigma_hat, mode)
    return FitResult(
        model=model,
        score=float(np.sum(node_scores)),
        s_hat=int(sum(len(S) for S in parents)),
        pi_hat=topological_order(model.B),
        method=method,
        node_scores=node_scores,
    )


def _score_cache(sigma_hat: CovarianceMatrix, lambda2: float, mode: str):
    """Memoized local score keyed on (node, parent bitmask)."""
    cache: dict[tuple[int, int], float] = {}
    matrix = sigma_hat.matrix
    floor = variance_floor(sigma_hat)
    warned = False

    def score_of(j: int, mask: int) -> float:
        key = (j, mask)
        val = cache.get(key)
        if val is not None:
            return val
        idx = np.asarray(_subsets.nodes_of(mask), dtype=np.intp)
        _, rss = regress(matrix, j, idx)
        k = len(idx)
        if mode == "profile":
            if rss < floor:
                nonlocal warned
                if not warned:
                    warned = True
                    warnings.warn(
                        f"residual variance clamped to the floor {floor:.3e} "
                        "during greedy search",
                        stacklevel=3,
                    )
                rss = floor
            val = 1.0 + float(np.log(rss)) + lambda2 * k
        else:
            if rss < NEGATIVE_RSS_TOL:
                raise NumericalError(
                    f"residual variance {rss:.3e} is negative beyond round-off"
                )
            val = max(rss, 0.0) + lambda2 * k
        cache[key] = val
        return val

    return score_of


def _forward_select(order: list[int], m: int, score_of) -> list[int]:
    """Greedy parent picks along an ordering: node order[i] draws from order[i+1:]."""
    p = len(order)
    masks = [0] * p
    for i in range(p):
        j = order[i]
        candidates = order[i + 1:]
        mask = 0
        while bin(mask).count("1") < m:
            base = score_of(j, mask)
            best_delta = -IMPROVE_TOL
            best_u = -1
            for u in candidates:
                bit = 1 << u
                if mask & bit:
                    continue
                delta = score_of(j, mask | bit) - base
                if delta < best_delta:
                    best_delta = delta
                    best_u = u
            if best_u < 0:
                break
            mask |= 1 << best_u
        masks[j] = mask
    return masks


def _steepest_descent(masks: list[int], m: int, score_of) -> list[int]:
    """Apply the best-improving add/delete/reverse until none improves."""
    p = len(masks)
    while True:
        best_delta = -IMPROVE_TOL
        best_move = None
        for v in range(p):
            mv = masks[v]
            base_v = score_of(v, mv)
            size_v = bin(mv).count("1")
            for u in range(p):
                if u == v:
                    continue
                bit_u = 1 << u
                if mv & bit_u:
                    # delete u -> v
                    delta = score_of(v, mv & ~bit_u) - base_v
                    if delta < best_delta:
                        best_delta = delta
                        best_move = ("del", u, v)
                    # reverse to v -> u
                    if bin(masks[u]).count("1") < m and not _has_path(
                        masks, u, v, skip=(u, v)
                    ):
                        delta = (
                            score_of(v, mv & ~bit_u)
                            - base_v
                            + score_of(u, masks[u] | (1 << v))
                            - score_of(u, masks[u])
                        )
                        if delta < best_delta:
                            best_delta = delta
                            best_move = ("rev", u, v)
                elif size_v < m and not _has_path(masks, v, u):
                    # add u -> v
                    delta = score_of(v, mv | bit_u) - base_v
                    if delta < best_delta:
                        best_delta = delta
                        best_move = ("add", u, v)
        if best_move is None:
            return masks
        kind, u, v = best_move
        if kind == "add":
            masks[v] |= 1 << u
        elif kind == "del":
            masks[v] &= ~(1 << u)
        else:
            masks[v] &= ~(1 << u)
            masks[u] |= 1 << v


def _has_path(masks: list[int], a: int, b: int, skip: tuple[int, int] | None = None) -> bool:
    """True when a directed path a -> ... -> b exists; ``skip`` drops one edge.

    Edges run parent -> child; masks[child] holds the parent bitmask, so the
    walk follows children: c is a child of x when masks[c] has bit x.
    """
    if a == b:
        return True
    p = len(masks)
    seen = 1 << a
    stack = [a]
    while stack:
        x = stack.pop()
        for c in range(p):
            if seen & (1 << c):
                continue
            if not masks[c] & (1 << x):
                continue
            if skip is not None and skip == (x, c):
                continue
            if c == b:
                return True
            seen |= 1 << c
            stack.append(c)
    return False
