"""Shared dense linear algebra helpers with the package's ridge policy."""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import NumericalError

RIDGE_SCALE = 1e-10


def regress(sigma: np.ndarray, j: int, idx) -> tuple[np.ndarray, float]:
    """Population/empirical regression of variable j on the variables in idx.

    Solves Sigma_SS b = Sigma_Sj and returns (b, rss) with
    rss = Sigma_jj - Sigma_jS b. A ridge of RIDGE_SCALE * trace/|S| is added
    once if the Cholesky factorization fails; a second failure raises
    NumericalError.
    """
    idx = np.asarray(idx, dtype=np.intp)
    k = idx.size
    if k == 0:
        return np.empty(0), float(sigma[j, j])
    sub = sigma[np.ix_(idx, idx)]
    rhs = sigma[idx, j]
    try:
        coef = cho_solve(cho_factor(sub, lower=True), rhs)
    except LinAlgError:
        ridge = RIDGE_SCALE * np.trace(sub) / k
        try:
            coef = cho_solve(
                cho_factor(sub + ridge * np.eye(k), lower=True), rhs
            )
        except LinAlgError as exc:
            raise NumericalError(
                f"covariance submatrix for node {j + 1} with parent set "
                f"{[int(v) + 1 for v in idx]} is singular beyond ridge repair"
            ) from exc
    rss = float(sigma[j, j] - rhs @ coef)
    return coef, rss


def chol_logdet(matrix: np.ndarray) -> float:
    """log det of a symmetric positive-definite matrix via Cholesky."""
    try:
        chol = np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("matrix is not positive definite") from exc
    return float(2.0 * np.sum(np.log(np.diag(chol))))
