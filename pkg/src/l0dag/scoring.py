"""Decomposable per-node penalized local scores and the best-parent table.

Profiling the noise variance out of the likelihood gives the per-node
score 1 + log RSS(j|S) + lambda^2 |S|; the equal-variance estimator uses
RSS(j|S) + lambda^2 |S|. Summed over nodes at the least-squares refit these
reproduce the penalized likelihood objective, so structure search only
needs per-node tables.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from . import _subsets
from ._backend import kernels
from ._linalg import regress
from .errors import NumericalError
from .model import CovarianceMatrix

TABLE_P_LIMIT = 25
FLOOR_SCALE = 1e-12
NEGATIVE_RSS_TOL = -1e-10
MODES = ("profile", "equalvar")


@dataclass(frozen=True, eq=False)
class LocalScoreTable:
    """Per-node best penalized scores over parent sets, bitmask indexed.

    ``best[j, c]`` is the minimum score over S subset of C with |S| <=
    max_parents, where c = compress(C, j); ``choice[j, c]`` is the winning
    compressed parent mask. Ties prefer smaller |S|, then the
    lexicographically smallest set.
    """

    mode: str
    lambda2: float
    max_parents: int
    n: int | None
    sigma: CovarianceMatrix
    best: np.ndarray
    choice: np.ndarray
    floor: float
    clamped: int

    @property
    def p(self) -> int:
        return self.sigma.p

    def best_for(self, j: int, candidates) -> tuple[float, tuple[int, ...]]:
        """Best (score, parent set) for node j over subsets of ``candidates``.

        ``candidates`` is an iterable of candidate parent nodes or a
        full-width bitmask; it must exclude j.
        """
        if not 0 <= j < self.p:
            raise ValueError(f"node index {j} outside 0..{self.p - 1}")
        if isinstance(candidates, (int, np.integer)):
            cmask = int(candidates)
        else:
            cmask = _subsets.mask_of(candidates)
        if cmask & (1 << j):
            raise ValueError(f"candidate set for node {j + 1} contains itself")
        if cmask >> self.p:
            raise ValueError("candidate mask addresses nodes outside the model")
        cidx = _subsets.compress(cmask, j)
        parents = _subsets.nodes_of(
            _subsets.expand(int(self.choice[j, cidx]), j)
        )
        return float(self.best[j, cidx]), parents

    def export_jsonl(self, fileobj) -> int:
        """Write one {"j", "C", "score", "S"} line per (node, candidate set).

        Node indices are 1-based; C is the candidate-set bitmask as an
        integer with bit i-1 for node i. Returns the line count. Meant for
        debugging at small p: the table has p * 2**(p-1) entries.
        """
        count = 0
        for j in range(self.p):
            for cidx in range(self.best.shape[1]):
                record = {
                    "j": j + 1,
                    "C": [
                        v + 1 for v in _subsets.nodes_of(_subsets.expand(cidx, j))
                    ],
                    "score": float(self.best[j, cidx]),
                    "S": [
                        v + 1
                        for v in _subsets.nodes_of(
                            _subsets.expand(int(self.choice[j, cidx]), j)
                        )
                    ],
                }
                fileobj.write(json.dumps(record) + "\n")
                count += 1
        return count


def variance_floor(sigma_hat: CovarianceMatrix) -> float:
    """Lower clamp for profiled residual variances: 1e-12 * max_j Sigma_jj."""
    return FLOOR_SCALE * sigma_hat.sigma0_sq


def residual_variance(j: int, S, sigma_hat: CovarianceMatrix) -> float:
    """RSS(j|S) = Sigma_jj - Sigma_jS (Sigma_SS)^-1 Sigma_Sj >= 0.

    Equals the mean squared residual of regressing X_j on X_S under the
    n-normalized inner product.
    """
    p = sigma_hat.p
    if not 0 <= j < p:
        raise ValueError(f"node index {j} outside 0..{p - 1}")
    idx = np.asarray(sorted(int(v) for v in S), dtype=np.intp)
    if np.any(idx == j):
        raise ValueError(f"parent set of node {j + 1} contains itself")
    if idx.size and (idx[0] < 0 or idx[-1] >= p or np.any(np.diff(idx) == 0)):
        raise ValueError(f"parent set {idx.tolist()} invalid for p={p}")
    _, rss = regress(sigma_hat.matrix, j, idx)
    return rss


def local_score_profile(
    j: int, S, sigma_hat: CovarianceMatrix, n: int | None, lambda2: float
) -> float:
    """1 + log RSS(j|S) + lambda^2 |S| (noise variance profiled out).

    The value does not depend on n; the argument is kept for signature
    symmetry with the table builder. RSS below the variance floor is
    clamped with a warning (overfitting guard).
    """
    if lambda2 < 0:
        raise ValueError(f"lambda2 must be >= 0, got {lambda2}")
    rss = residual_variance(j, S, sigma_hat)
    floor = variance_floor(sigma_hat)
    if rss < floor:
        warnings.warn(
            f"residual variance {rss:.3e} of node {j + 1} clamped to the "
            f"floor {floor:.3e}; the fit would otherwise overfit this node",
            stacklevel=2,
        )
        rss = floor
    return 1.0 + float(np.log(rss)) + lambda2 * len(tuple(S))


def local_score_equal_variance(
    j: int, S, sigma_hat: CovarianceMatrix, lambda2: float
) -> float:
    """RSS(j|S) + lambda^2 |S| (unit-variance likelihood, no log, no floor)."""
    if lambda2 < 0:
        raise ValueError(f"lambda2 must be >= 0, got {lambda2}")
    rss = residual_variance(j, S, sigma_hat)
    rss = _clip_negative_rss(np.asarray(rss))
    return float(rss) + lambda2 * len(tuple(S))


def _clip_negative_rss(rss):
    bad = rss < NEGATIVE_RSS_TOL
    if np.any(bad):
        raise NumericalError(
            f"residual variance {float(np.min(rss)):.3e} is negative beyond "
            "round-off; covariance input is numerically inconsistent"
        )
    return np.where(rss < 0.0, 0.0, rss)


def bic_lambda2(n: int) -> float:
    """The BIC-equivalent penalty weight lambda^2 = log n / n."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return float(np.log(n) / n)


def default_max_parents(sigma_hat: CovarianceMatrix, n: int | None) -> int:
    """floor(alpha n / log p) with alpha = Lambda_min^2 / (288 sigma_0^2).

    alpha is evaluated on the input covariance itself. Capped at n - 2 and
    p - 1; without a sample size the cap is p - 1. Deliberately
    conservative; callers usually override.
    """
    p = sigma_hat.p
    if n is None:
        return p - 1
    alpha = sigma_hat.lambda_min_sq / (288.0 * sigma_hat.sigma0_sq)
    m = int(np.floor(alpha * n / np.log(max(p, 2))))
    return max(0, min(m, n - 2, p - 1))


def build_score_table(
    sigma_hat: CovarianceMatrix,
    n: int | None = None,
    lambda2: float = 0.0,
    mode: str = "profile",
    max_parents: int | None = None,
) -> LocalScoreTable:
    """Score every (node, parent set) pair and reduce to best-over-subsets.

    Phase 1 scores all |S| <= max_parents directly; phase 2 runs the subset
    recursion best(j, C) = min(score(j, C), min_c best(j, C - {c})). A
    lambda2 of 0 is a plain maximum-likelihood table and is not warned
    about.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if lambda2 < 0:
        raise ValueError(f"lambda2 must be >= 0, got {lambda2}")
    p = sigma_hat.p
    if p > TABLE_P_LIMIT:
        raise ValueError(
            f"p={p} exceeds the table limit {TABLE_P_LIMIT} "
            f"(p * 2**(p-1) entries); use fit_greedy instead"
        )
    if n is None:
        n = sigma_hat.n
    if max_parents is None:
        m = default_max_parents(sigma_hat, n)
    else:
        m = min(int(max_parents), p - 1)
        if m < 0:
            raise ValueError(f"max_parents must be >= 0, got {max_parents}")

    kern = kernels()
    rss, _, _ = kern.subset_tables(sigma_hat.matrix, m, 0.0, np.inf, False)
    width = rss.shape[1]
    pc = _subsets.popcounts(width)
    rk = _subsets.bit_reversal_keys(p - 1) if p > 1 else np.zeros(1, np.int64)
    in_cap = pc <= m
    if np.any(np.isnan(rss[:, in_cap])):
        raise NumericalError(
            "a covariance submatrix within the parent cap is singular "
            "beyond ridge repair"
        )

    clamped = 0
    if mode == "profile":
        floor = variance_floor(sigma_hat)
        finite = np.isfinite(rss)
        low = finite & (rss < floor)
        clamped = int(np.count_nonzero(low))
        if clamped:
            warnings.warn(
                f"{clamped} residual variances clamped to the floor "
                f"{floor:.3e}; the likelihood is unbounded at those nodes",
                stacklevel=2,
            )
        safe = np.where(low, floor, rss)
        scores = np.where(finite, 1.0 + np.log(safe) + lambda2 * pc, np.inf)
    else:
        floor = 0.0
        finite = np.isfinite(rss)
        if np.any(finite & (rss < NEGATIVE_RSS_TOL)):
            raise NumericalError(
                f"residual variance {float(np.nanmin(rss)):.3e} is negative "
                "beyond round-off; covariance input is numerically inconsistent"
            )
        clipped = np.where(finite & (rss < 0.0), 0.0, rss)
        scores = np.where(finite, clipped + lambda2 * pc, np.inf)

    best, choice = kern.best_over_subsets(np.ascontiguousarray(scores), pc, rk)
    return LocalScoreTable(
        mode=mode,
        lambda2=float(lambda2),
        max_parents=m,
        n=n,
        sigma=sigma_hat,
        best=best,
        choice=choice,
        floor=floor,
        clamped=clamped,
    )
