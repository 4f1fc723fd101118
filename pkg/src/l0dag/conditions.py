"""Identifiability and sample-size condition checks plus closed-form constants.

The quantities checked live on the ordering-indexed family of triangular
representations of a covariance: maximum in-degree, edge-weight magnitudes,
and noise-variance deviation from 1. Exhaustive enumeration of all p!
orderings is feasible only for p <= 8; beyond that a fixed-seed sample of
orderings gives a "no counterexample found" report, never a certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _subsets
from ._backend import kernels
from .errors import NumericalError
from .model import CovarianceMatrix, DagModel, covariance_of
from .representation import default_zero_tol

EXHAUSTIVE_LIMIT = 8
SAMPLED_K = 20000
SAMPLED_SEED = 0
_SAMPLE_CHUNK = 512
# a representation counts as "identity noise" when every variance is this close to 1
OMEGA_IDENTITY_TOL = 1e-9
EIGEN_TOL = 1e-12


@dataclass(frozen=True)
class ConditionCheck:
    """One measured-vs-threshold comparison."""

    condition: int
    satisfied: bool
    measured: float
    threshold: float
    comparison: str
    enumeration: str | None = None
    enumerated: int | None = None
    note: str = ""

    def to_dict(self) -> dict:
        out = {
            "condition": self.condition,
            "satisfied": self.satisfied,
            "measured": self.measured,
            "threshold": self.threshold,
            "comparison": self.comparison,
        }
        if self.enumeration is not None:
            out["enumeration"] = self.enumeration
            out["enumerated"] = self.enumerated
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True, eq=False)
class ConditionReport:
    """A bundle of checks with the free constants they used.

    ``advisory`` is set for empirical covariance inputs: the conditions are
    population statements, so a sample-based report cannot certify them.
    """

    checks: tuple[ConditionCheck, ...]
    constants: dict
    p: int
    n: int | None
    advisory: bool

    @property
    def satisfied(self) -> bool:
        return all(c.satisfied for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "advisory": self.advisory,
            "satisfied": self.satisfied,
            "constants": dict(self.constants),
            "checks": [c.to_dict() for c in self.checks],
        }


def _as_cov(model_or_sigma) -> tuple[CovarianceMatrix, DagModel | None]:
    if isinstance(model_or_sigma, DagModel):
        return covariance_of(model_or_sigma), model_or_sigma
    if isinstance(model_or_sigma, CovarianceMatrix):
        return model_or_sigma, None
    return CovarianceMatrix(np.asarray(model_or_sigma, dtype=np.float64)), None


def check_basic(model_or_sigma, sigma0_sq: float) -> ConditionReport:
    """Variance bound (max_j Sigma_jj <= sigma0^2) and positive definiteness.

    For a DagModel input the determinant identity det Sigma = prod_j omega_j
    ties the eigenvalue check to the noise variances; the agreement is
    recorded in the report note.
    """
    if sigma0_sq <= 0:
        raise ValueError(f"sigma0_sq must be > 0, got {sigma0_sq}")
    sigma, model = _as_cov(model_or_sigma)
    max_var = float(np.max(np.diag(sigma.matrix)))
    lam = float(sigma.lambda_min_sq)
    note = ""
    if model is not None:
        omega_min = float(np.min(model.omega) ** 2)
        agree = (lam > EIGEN_TOL) == (omega_min > 0.0)
        note = (
            f"min_j omega_j^2 = {omega_min:.6e}; positivity agrees with the "
            f"eigenvalue check: {agree}"
        )
    checks = (
        ConditionCheck(1, max_var <= sigma0_sq, max_var, float(sigma0_sq), "<="),
        ConditionCheck(2, lam > EIGEN_TOL, lam, EIGEN_TOL, ">", note=note),
    )
    return ConditionReport(
        checks=checks,
        constants={"sigma0_sq": float(sigma0_sq), "lambda_min_sq": lam},
        p=sigma.p,
        n=sigma.n,
        advisory=sigma.kind == "empirical",
    )


def check_degree(
    model_or_sigma, n: int, alpha_tilde: float, mode: str = "auto"
) -> ConditionReport:
    """Max in-degree over all orderings vs alpha_tilde * n / log p."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if alpha_tilde <= 0:
        raise ValueError(f"alpha_tilde must be > 0, got {alpha_tilde}")
    sigma, _ = _as_cov(model_or_sigma)
    stats = _ordering_stats(sigma, np.inf, mode)
    measured = float(np.max(stats.max_degree))
    p = sigma.p
    threshold = alpha_tilde * n / math.log(p) if p >= 2 else np.inf
    check = ConditionCheck(
        4,
        measured <= threshold,
        measured,
        threshold,
        "<=",
        enumeration=stats.label,
        enumerated=stats.count,
        note=stats.note,
    )
    return ConditionReport(
        checks=(check,),
        constants={"alpha_tilde": float(alpha_tilde), "n": int(n)},
        p=p,
        n=sigma.n,
        advisory=sigma.kind == "empirical",
    )


def check_beta_min(
    model_or_sigma,
    n: int,
    s0: int,
    eta0: float,
    eta1: float,
    mode: str = "auto",
) -> ConditionReport:
    """Fraction of representation edges above the beta-min threshold.

    The threshold is sqrt(log p / n) * (sqrt(p / s0) or 1, whichever is
    larger) / eta0; the check passes when every enumerated ordering keeps at
    least a (1 - eta1) fraction of its edges above it. Orderings without
    edges pass vacuously.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if s0 < 1:
        raise ValueError(f"need s0 >= 1, got {s0}")
    if eta0 <= 0:
        raise ValueError(f"eta0 must be > 0, got {eta0}")
    if not 0.0 <= eta1 <= 1.0:
        raise ValueError(f"eta1 must be in [0, 1], got {eta1}")
    sigma, _ = _as_cov(model_or_sigma)
    p = sigma.p
    beta_threshold = (
        math.sqrt(math.log(p) / n) * max(math.sqrt(p / s0), 1.0) / eta0
        if p >= 2
        else 0.0
    )
    stats = _ordering_stats(sigma, beta_threshold, mode)
    with np.errstate(invalid="ignore"):
        fractions = np.where(
            stats.edges > 0, stats.strong_edges / np.maximum(stats.edges, 1), 1.0
        )
    worst = int(np.argmin(fractions))
    measured = float(fractions[worst])
    note = stats.note
    if stats.perms is not None:
        pi = tuple(int(v) + 1 for v in stats.perms[worst])
        note = (note + "; " if note else "") + f"worst ordering (1-based): {pi}"
    check = ConditionCheck(
        5,
        measured >= 1.0 - eta1,
        measured,
        1.0 - eta1,
        ">=",
        enumeration=stats.label,
        enumerated=stats.count,
        note=note,
    )
    return ConditionReport(
        checks=(check,),
        constants={
            "eta0": float(eta0),
            "eta1": float(eta1),
            "s0": int(s0),
            "n": int(n),
            "beta_threshold": beta_threshold,
        },
        p=p,
        n=sigma.n,
        advisory=sigma.kind == "empirical",
    )


def check_omega_min(
    model_or_sigma,
    eta_omega: float,
    n: int | None = None,
    alpha_star: float | None = None,
    mode: str = "auto",
) -> ConditionReport:
    """Noise-variance separation from identity, plus the dimension bound.

    Over every enumerated ordering whose representation noise differs from
    the identity (some |omega_j - 1| > 1e-9), the mean squared deviation
    (1/p) sum_j (omega_j - 1)^2 must exceed 1 / eta_omega. When n and
    alpha_star are given, p <= alpha_star * n / log n is checked as well.
    """
    if eta_omega <= 0:
        raise ValueError(f"eta_omega must be > 0, got {eta_omega}")
    sigma, _ = _as_cov(model_or_sigma)
    p = sigma.p
    stats = _ordering_stats(sigma, np.inf, mode)
    qualifying = stats.dev_max > OMEGA_IDENTITY_TOL**2
    threshold = 1.0 / eta_omega
    if np.any(qualifying):
        measured = float(np.min(stats.dev_sum[qualifying]) / p)
        note = stats.note
    else:
        measured = np.inf
        note = (
            (stats.note + "; " if stats.note else "")
            + "every enumerated ordering has identity noise; vacuous pass"
        )
    checks = [
        ConditionCheck(
            6,
            measured > threshold,
            measured,
            threshold,
            ">",
            enumeration=stats.label,
            enumerated=stats.count,
            note=note,
        )
    ]
    constants = {"eta_omega": float(eta_omega)}
    if n is not None and alpha_star is not None:
        if n < 2:
            raise ValueError(f"need n >= 2 for the dimension bound, got {n}")
        bound = alpha_star * n / math.log(n)
        checks.append(ConditionCheck(7, p <= bound, float(p), bound, "<="))
        constants.update({"alpha_star": float(alpha_star), "n": int(n)})
    return ConditionReport(
        checks=tuple(checks),
        constants=constants,
        p=p,
        n=sigma.n,
        advisory=sigma.kind == "empirical",
    )


@dataclass(frozen=True)
class _OrderingStats:
    """Per-ordering reductions of the triangular representation family."""

    label: str
    count: int
    note: str
    max_degree: np.ndarray
    edges: np.ndarray
    strong_edges: np.ndarray
    dev_sum: np.ndarray
    dev_max: np.ndarray
    perms: np.ndarray | None


def _ordering_stats(
    sigma: CovarianceMatrix,
    coef_threshold: float,
    mode: str,
    k: int = SAMPLED_K,
    seed: int = SAMPLED_SEED,
) -> _OrderingStats:
    if mode not in ("auto", "exhaustive", "sampled"):
        raise ValueError(f"mode must be auto|exhaustive|sampled, got {mode!r}")
    sigma.require_positive_definite()
    p = sigma.p
    if mode == "exhaustive" and p > EXHAUSTIVE_LIMIT:
        raise ValueError(
            f"exhaustive enumeration of {p}! orderings is not supported for "
            f"p > {EXHAUSTIVE_LIMIT}; use mode='sampled'"
        )
    exhaustive = mode == "exhaustive" or (mode == "auto" and p <= EXHAUSTIVE_LIMIT)
    if exhaustive:
        return _exhaustive_stats(sigma, coef_threshold)
    return _sampled_stats(sigma, coef_threshold, k, seed)


def _exhaustive_stats(sigma: CovarianceMatrix, coef_threshold: float) -> _OrderingStats:
    p = sigma.p
    zero_tol = default_zero_tol(sigma)
    kern = kernels()
    rss, nnz, npass = kern.subset_tables(
        sigma.matrix, p - 1, zero_tol, coef_threshold, True
    )
    if np.any(np.isnan(rss)):
        raise NumericalError(
            "a principal submatrix is singular beyond ridge repair; "
            "cannot enumerate representations"
        )
    perms = _subsets.all_orderings(p)
    tails = _subsets.tail_masks(perms)
    nnz_f = nnz.astype(np.float64)
    dev = np.square(rss - 1.0)
    return _OrderingStats(
        label="exhaustive",
        count=perms.shape[0],
        note="",
        max_degree=kern.perm_max(nnz_f, perms, tails),
        edges=kern.perm_sum(nnz_f, perms, tails),
        strong_edges=kern.perm_sum(npass.astype(np.float64), perms, tails),
        dev_sum=kern.perm_sum(dev, perms, tails),
        dev_max=kern.perm_max(dev, perms, tails),
        perms=perms,
    )


def _sampled_stats(
    sigma: CovarianceMatrix, coef_threshold: float, k: int, seed: int
) -> _OrderingStats:
    p = sigma.p
    zero_tol = default_zero_tol(sigma)
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    )
    perms = np.argsort(rng.random((k, p)), axis=1).astype(np.int64)
    revs = perms[:, ::-1]
    max_degree = np.empty(k)
    edges = np.empty(k)
    strong = np.empty(k)
    dev_sum = np.empty(k)
    dev_max = np.empty(k)
    eye = np.eye(p)
    for lo in range(0, k, _SAMPLE_CHUNK):
        hi = min(lo + _SAMPLE_CHUNK, k)
        rv = revs[lo:hi]
        M = sigma.matrix[rv[:, :, None], rv[:, None, :]]
        try:
            C = np.linalg.cholesky(M)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                "Cholesky failed on a permuted covariance during sampling"
            ) from exc
        W = np.linalg.solve(C, np.broadcast_to(eye, M.shape).copy())
        T = np.tril(C, -1) @ W  # strictly lower: row i = coefficients of rv[:, i]
        absT = np.abs(T)
        adj = absT > zero_tol
        max_degree[lo:hi] = adj.sum(axis=2).max(axis=1)
        edges[lo:hi] = adj.sum(axis=(1, 2))
        strong[lo:hi] = (absT > coef_threshold).sum(axis=(1, 2))
        omg = np.einsum("bii->bi", C) ** 2
        devs = np.square(omg - 1.0)
        dev_sum[lo:hi] = devs.sum(axis=1)
        dev_max[lo:hi] = devs.max(axis=1)
    return _OrderingStats(
        label="sampled",
        count=k,
        note=f"sampled {k} of {math.factorial(p)} orderings (seed {seed}); "
        "a pass means no counterexample found",
        max_degree=max_degree,
        edges=edges,
        strong_edges=strong,
        dev_sum=dev_sum,
        dev_max=dev_max,
        perms=perms,
    )


@dataclass(frozen=True)
class TheoremConstants:
    """Closed-form constants as functions of (sigma0, lambda_min, p, s0, n, t).

    Pure arithmetic; recomputing any field from its formula reproduces the
    stored value exactly.
    """

    sigma0: float
    lambda_min: float
    p: int
    s0: int
    n: int
    t: float
    c1: float
    c2: float
    r: float
    c: float
    K0: float
    alpha: float
    alpha_tilde: float
    delta1: float
    delta2: float
    delta3: float
    delta_B: float
    delta_W: float
    delta_s: float
    delta_eta: float
    eta1: float
    eta0_sq: float
    eta2_sq: float
    lambda_sq: float
    lambda0_sq: float
    lambda1_sq: float
    lambda2_sq: float
    lambda3_sq: float
    lambda_tilde_sq: float
    alpha0: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def theorem_constants(
    sigma0: float,
    lambda_min: float,
    p: int,
    s0: int,
    n: int,
    t: float | None = None,
) -> TheoremConstants:
    """Evaluate every closed-form tuning constant at the given primitives.

    sigma0 and lambda_min enter unsquared; t defaults to log p. c1 = 96 and
    c2 = 3840 are fixed.
    """
    if sigma0 <= 0 or lambda_min <= 0:
        raise ValueError("sigma0 and lambda_min must be > 0")
    if p < 1 or s0 < 1 or n < 1:
        raise ValueError("p, s0, n must be >= 1")
    if t is None:
        t = math.log(p)
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    c1 = 96.0
    c2 = 3840.0
    s2 = sigma0**2
    s4 = sigma0**4
    L2 = lambda_min**2
    L4 = lambda_min**4
    logp = math.log(p)
    r = (p / s0 + 1.0) * c2 * s4 / L4 + c1 * s2 / L2
    c = 4.0 * r + 2.0 * (c1 * s2 / L2 + c2 * s4 / L4)
    eta0_sq = 1.0 / (2.0 * (c + r))
    return TheoremConstants(
        sigma0=float(sigma0),
        lambda_min=float(lambda_min),
        p=int(p),
        s0=int(s0),
        n=int(n),
        t=float(t),
        c1=c1,
        c2=c2,
        r=r,
        c=c,
        K0=2.0 / lambda_min,
        alpha=L2 / (288.0 * s2),
        alpha_tilde=L2 / (288.0 * s2),
        delta1=L2 / 8.0,
        delta2=L4 / (64.0 * s4),
        delta3=lambda_min / 2.0,
        delta_B=L4 / 32.0,
        delta_W=lambda_min**6 / (256.0 * s4),
        delta_s=1.0 - c1 * s2 / (c * L2) - c2 * s4 / (c * L4),
        delta_eta=0.5,
        eta1=0.0,
        eta0_sq=eta0_sq,
        eta2_sq=eta0_sq * (c + r) * 32.0 / L4,
        lambda_sq=c * logp / n,
        lambda0_sq=r * logp / n,
        lambda1_sq=12.0 * s2 * logp / n,
        lambda2_sq=60.0 * logp / n,
        lambda3_sq=9.0 * s2 * logp / n,
        lambda_tilde_sq=(c + r) * (32.0 / L4) * logp / n,
        alpha0=min(4.0 / p, 0.05),
    )


def cond_edges_alpha(
    sigma0_sq: float, lambda_min_sq: float, eta0: float, eta1: float
) -> float:
    """alpha_tilde = sigma0^2 eta0^2 / (Lambda_min^2 (1 - eta1))."""
    if eta1 >= 1.0:
        raise ValueError(f"eta1 must be < 1, got {eta1}")
    if sigma0_sq <= 0 or lambda_min_sq <= 0 or eta0 <= 0:
        raise ValueError("sigma0_sq, lambda_min_sq, eta0 must be > 0")
    return sigma0_sq * eta0**2 / (lambda_min_sq * (1.0 - eta1))


def connected_components(
    sigma_hat, threshold: float | None = None, eta_c: float = 1.0
) -> tuple[tuple[int, ...], ...]:
    """Partition of 0..p-1 by |correlation| > threshold, via union-find.

    Defaults: sqrt(log p / n) / eta_c when the covariance carries a sample
    size, otherwise an absolute 0.025. Components are sorted by smallest
    member. A fit can then run per component.
    """
    sigma, _ = _as_cov(sigma_hat)
    d = np.diag(sigma.matrix)
    if np.any(d <= 0):
        j = int(np.argmax(d <= 0))
        raise ValueError(
            f"variance of node {j + 1} is {d[j]:.3e}; correlation undefined"
        )
    p = sigma.p
    if threshold is None:
        if eta_c <= 0:
            raise ValueError(f"eta_c must be > 0, got {eta_c}")
        if sigma.n is not None:
            threshold = math.sqrt(math.log(p) / sigma.n) / eta_c
        else:
            threshold = 0.025
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    corr = np.abs(sigma.matrix) / np.sqrt(np.outer(d, d))
    parent = list(range(p))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for j, k in zip(*np.nonzero(np.triu(corr > threshold, 1))):
        ra, rb = find(int(j)), find(int(k))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    groups: dict[int, list[int]] = {}
    for v in range(p):
        groups.setdefault(find(v), []).append(v)
    return tuple(tuple(groups[r]) for r in sorted(groups))
