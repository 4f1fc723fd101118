"""Permutation-indexed representations of a covariance matrix.

For an ordering pi, Gram-Schmidt projects X_{pi_k} on X_{pi_{k+1}}, ...,
X_{pi_p} (starting from the last position), giving coefficients B~(pi) and
residual variances Omega~(pi) with Theta(B~, Omega~) = Sigma^-1 for every
pi. Edge profiles count the non-zeros per node; the minimal-edge I-MAP
minimizes the total over orderings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import _subsets
from ._backend import kernels
from .errors import NotPositiveDefiniteError
from .model import CovarianceMatrix, DagModel, Ordering, precision_of

EXHAUSTIVE_P_LIMIT = 9
SAMPLED_CAP = 20000


@dataclass(frozen=True)
class EdgeProfile:
    """Per-node incoming-edge counts and support sets of one representation."""

    per_node: tuple[int, ...]
    supports: tuple[tuple[int, ...], ...]

    @property
    def total(self) -> int:
        """s~(pi) = sum_j s~_j(pi)."""
        return sum(self.per_node)


def default_zero_tol(sigma: CovarianceMatrix) -> float:
    """1e-9 on population matrices, 0 (disabled) on empirical ones.

    Population coefficients that vanish in exact arithmetic carry floating
    point dust; empirical coefficients are almost surely non-zero and any
    sparsity must come from the estimator.
    """
    return 1e-9 if sigma.kind == "population" else 0.0


def gram_schmidt_representation(
    sigma: CovarianceMatrix, pi: Ordering, zero_tol: float | None = None
) -> DagModel:
    """The representation (B~(pi), Omega~(pi)) of a PD covariance.

    Computed through the Cholesky factorization of the pi-reversed
    permutation of Sigma (successive Schur complements): the regression of
    the variable at reversed position i on the variables before it uses the
    leading i x i block, and the residual variance is the squared Cholesky
    diagonal. Coefficients with |b| <= zero_tol are stored as exact zeros.
    """
    if zero_tol is None:
        zero_tol = default_zero_tol(sigma)
    if pi.p != sigma.p:
        raise ValueError(f"ordering has p={pi.p}, covariance p={sigma.p}")
    sigma.require_positive_definite()
    rev = list(pi.order[::-1])
    m = sigma.matrix[np.ix_(rev, rev)]
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            "covariance must be positive definite: Cholesky factorization "
            "failed under the requested ordering"
        ) from exc
    p = sigma.p
    B = np.zeros((p, p))
    omega = np.empty(p)
    for i in range(p):
        node = rev[i]
        omega[node] = chol[i, i] ** 2
        if i:
            y = solve_triangular(chol[:i, :i], m[:i, i], lower=True)
            beta = solve_triangular(chol[:i, :i].T, y, lower=False)
            beta[np.abs(beta) <= zero_tol] = 0.0
            B[rev[:i], node] = beta
    return DagModel(B=B, omega=omega)


def edge_profile(
    sigma: CovarianceMatrix, pi: Ordering, zero_tol: float | None = None
) -> EdgeProfile:
    """Non-zero counts s~_j(pi) and supports S~_j(pi) of the representation."""
    model = gram_schmidt_representation(sigma, pi, zero_tol)
    supports = tuple(model.parents(j) for j in range(model.p))
    return EdgeProfile(
        per_node=tuple(len(s) for s in supports), supports=supports
    )


def minimal_edge_imap(
    sigma: CovarianceMatrix,
    zero_tol: float | None = None,
    mode: str = "exhaustive",
    k: int | None = None,
    seed: int = 0,
) -> tuple[DagModel, Ordering]:
    """Representation with the fewest edges over orderings.

    Exhaustive mode enumerates all p! orderings (p <= 9) and is globally
    optimal; ties break to the lexicographically smallest ordering. Sampled
    mode draws k uniform orderings (default min(10 p!, 20000)) plus the
    identity and returns an upper bound on the minimum.
    """
    if zero_tol is None:
        zero_tol = default_zero_tol(sigma)
    sigma.require_positive_definite()
    p = sigma.p
    if mode == "exhaustive":
        if p > EXHAUSTIVE_P_LIMIT:
            raise ValueError(
                f"exhaustive enumeration of {p}! orderings is over the "
                f"p <= {EXHAUSTIVE_P_LIMIT} limit; use mode='sampled'"
            )
        best_order = _argmin_edges_exhaustive(sigma, zero_tol)
    elif mode == "sampled":
        best_order = _argmin_edges_sampled(sigma, zero_tol, k, seed)
    else:
        raise ValueError(f"mode must be exhaustive or sampled, got {mode!r}")
    model = gram_schmidt_representation(sigma, best_order, zero_tol)
    return model, best_order


def _argmin_edges_exhaustive(sigma: CovarianceMatrix, zero_tol: float) -> Ordering:
    p = sigma.p
    if p == 1:
        return Ordering.identity(1)
    kern = kernels()
    _, nnz, _ = kern.subset_tables(sigma.matrix, p - 1, zero_tol, np.inf, True)
    perms = _subsets.all_orderings(p)
    tails = _subsets.tail_masks(perms)
    totals = kern.perm_sum(nnz.astype(np.float64), perms, tails)
    # lexicographic enumeration order makes argmin the lex-smallest tie
    return Ordering(tuple(int(v) for v in perms[int(np.argmin(totals))]))


def _argmin_edges_sampled(
    sigma: CovarianceMatrix, zero_tol: float, k: int | None, seed: int
) -> Ordering:
    p = sigma.p
    if k is None:
        k = min(10 * _factorial_capped(p), SAMPLED_CAP)
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))
    )
    best_order = Ordering.identity(p)
    best_count = edge_profile(sigma, best_order, zero_tol).total
    for _ in range(k):
        cand = Ordering(tuple(int(v) for v in rng.permutation(p)))
        count = edge_profile(sigma, cand, zero_tol).total
        if count < best_count or (
            count == best_count and cand.order < best_order.order
        ):
            best_order = cand
            best_count = count
    return best_order


def _factorial_capped(p: int, cap: int = SAMPLED_CAP) -> int:
    out = 1
    for i in range(2, p + 1):
        out *= i
        if out >= cap:
            return cap
    return out


def equivalent(m1: DagModel, m2: DagModel, tol: float) -> bool:
    """True iff the precisions agree entrywise within tol and edge counts match."""
    if m1.p != m2.p:
        raise ValueError(f"models have different sizes {m1.p} and {m2.p}")
    gap = np.max(np.abs(precision_of(m1).matrix - precision_of(m2).matrix))
    return bool(gap <= tol and m1.s_edges == m2.s_edges)
