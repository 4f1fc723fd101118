"""Gaussian DAG / linear SEM data model and the likelihood it is scored by.

A model is a pair (B, Omega): B[k, j] is the weight of edge k -> j (column j
holds the regression of X_j on its parents) and Omega the vector of noise
variances. The implied covariance and precision are
Sigma = (I-B)^-T Omega (I-B)^-1 and Theta = (I-B) Omega^-1 (I-B)^T.

Orderings are stored children-first: if pi is an ordering of a model then
the parents of pi_k lie in {pi_{k+1}, ..., pi_p}, B[pi, pi] is strictly
lower triangular, and Gram-Schmidt elimination starts with the variable at
the last position.
"""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._linalg import chol_logdet
from .errors import CycleError, NotPositiveDefiniteError

SOFT_P_CAP = 2000
ASYM_WARN = 1e-8
ASYM_ERROR = 1e-4


def _as_square_float(arr, name: str) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    if out.shape[0] > SOFT_P_CAP:
        warnings.warn(
            f"{name} has p={out.shape[0]} > {SOFT_P_CAP}; "
            "the package is tuned for smaller problems",
            stacklevel=3,
        )
    return out


def _symmetrize(a: np.ndarray, name: str) -> np.ndarray:
    dev = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    rel = dev / scale if scale > 0 else 0.0
    if rel > ASYM_ERROR:
        raise ValueError(
            f"{name} deviates from symmetry by {rel:.3e} (relative), "
            f"above the {ASYM_ERROR:.0e} limit"
        )
    if rel > ASYM_WARN:
        warnings.warn(
            f"{name} deviates from symmetry by {rel:.3e}; symmetrizing",
            stacklevel=3,
        )
    return (a + a.T) / 2.0


@dataclass(frozen=True)
class Ordering:
    """A permutation of the nodes 0..p-1 (children-first semantics above)."""

    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(v) for v in self.order)
        object.__setattr__(self, "order", order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"not a permutation of 0..{len(order) - 1}: {order}")

    @classmethod
    def identity(cls, p: int) -> "Ordering":
        return cls(tuple(range(p)))

    @classmethod
    def from_one_based(cls, seq) -> "Ordering":
        return cls(tuple(int(v) - 1 for v in seq))

    def to_one_based(self) -> tuple[int, ...]:
        return tuple(v + 1 for v in self.order)

    def positions(self) -> np.ndarray:
        """positions()[node] = index of node within the ordering."""
        pos = np.empty(len(self.order), dtype=np.intp)
        pos[list(self.order)] = np.arange(len(self.order))
        return pos

    @property
    def p(self) -> int:
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def __len__(self):
        return len(self.order)


@dataclass(frozen=True, eq=False)
class DagModel:
    """Weighted DAG (B, Omega); validated acyclic with positive variances."""

    B: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        B = _as_square_float(self.B, "B")
        omega = np.array(self.omega, dtype=np.float64).reshape(-1)
        if omega.shape[0] != B.shape[0]:
            raise ValueError(
                f"omega has length {omega.shape[0]}, expected {B.shape[0]}"
            )
        if np.any(np.diag(B) != 0.0):
            raise ValueError("diagonal of B must be identically zero")
        if not np.all(np.isfinite(omega)) or np.any(omega <= 0.0):
            raise ValueError("every omega entry must be finite and > 0")
        topological_order(B)  # raises CycleError on a cycle
        B.flags.writeable = False
        omega.flags.writeable = False
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "omega", omega)

    @property
    def p(self) -> int:
        return self.B.shape[0]

    @property
    def s_edges(self) -> int:
        """Number of edges s_B = #{B[k, j] != 0}."""
        return int(np.count_nonzero(self.B))

    def parents(self, j: int) -> tuple[int, ...]:
        return tuple(int(k) for k in np.nonzero(self.B[:, j])[0])

    def edge_set(self) -> frozenset[tuple[int, int]]:
        ks, js = np.nonzero(self.B)
        return frozenset((int(k), int(j)) for k, j in zip(ks, js))

    def to_dict(self) -> dict:
        """JSON form with 1-based node indices."""
        edges = [
            [int(k) + 1, int(j) + 1, float(self.B[k, j])]
            for k, j in sorted(zip(*np.nonzero(self.B)))
        ]
        return {"p": self.p, "edges": edges, "omega": [float(w) for w in self.omega]}

    @classmethod
    def from_dict(cls, data: dict) -> "DagModel":
        p = int(data["p"])
        B = np.zeros((p, p))
        for k, j, beta in data["edges"]:
            k, j = int(k) - 1, int(j) - 1
            if not (0 <= k < p and 0 <= j < p):
                raise ValueError(f"edge ({k + 1}, {j + 1}) outside 1..{p}")
            B[k, j] = float(beta)
        return cls(B=B, omega=np.asarray(data["omega"], dtype=np.float64))


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Symmetric PSD matrix, either a population Sigma_0 or an empirical
    Sigma_n = X^T X / n.

    Inputs are symmetrized as (A + A^T)/2; relative asymmetry above 1e-8
    warns, above 1e-4 raises.
    """

    matrix: np.ndarray
    kind: str = "population"
    n: int | None = None
    _eigmin: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("population", "empirical"):
            raise ValueError(f"kind must be population or empirical, got {self.kind!r}")
        if self.kind == "empirical":
            if self.n is None or int(self.n) < 2:
                raise ValueError("empirical covariance requires n >= 2")
            object.__setattr__(self, "n", int(self.n))
        elif self.n is not None:
            raise ValueError("population covariance must not carry a sample size")
        m = _symmetrize(_as_square_float(self.matrix, "covariance"), "covariance")
        eigmin = float(np.linalg.eigvalsh(m)[0]) if m.size else 0.0
        scale = max(float(np.max(np.abs(np.diag(m)))), 1.0) if m.size else 1.0
        if eigmin < -1e-8 * scale:
            raise NotPositiveDefiniteError(
                f"covariance has eigenvalue {eigmin:.6e} < 0; not PSD"
            )
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_eigmin", eigmin)

    @property
    def p(self) -> int:
        return self.matrix.shape[0]

    @property
    def lambda_min_sq(self) -> float:
        """Smallest eigenvalue of the stored matrix."""
        return self._eigmin

    @property
    def sigma0_sq(self) -> float:
        """Largest diagonal entry max_j sigma_j^2."""
        return float(np.max(np.diag(self.matrix)))

    def require_positive_definite(self, tol: float = 1e-12):
        if not self.lambda_min_sq > tol:
            raise NotPositiveDefiniteError(
                "covariance must be positive definite: smallest eigenvalue "
                f"{self.lambda_min_sq:.6e} is not above {tol:.0e}"
            )


@dataclass(frozen=True, eq=False)
class PrecisionMatrix:
    """Symmetric positive-definite precision Theta."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _symmetrize(_as_square_float(self.matrix, "precision"), "precision")
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(
                "precision matrix is not positive definite"
            ) from exc
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def p(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Dataset:
    """An n x p observation matrix with optional seed provenance."""

    X: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"data must be 2-dimensional, got shape {X.shape}")
        if X.shape[0] < 2:
            raise ValueError(f"need n >= 2 rows, got {X.shape[0]}")
        if not np.all(np.isfinite(X)):
            raise ValueError("data contains non-finite entries")
        X.flags.writeable = False
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def precision_of(model: DagModel) -> PrecisionMatrix:
    """Theta = (I - B) Omega^-1 (I - B)^T.

    det Theta = prod 1/omega_j^2 because det(I - B) = 1 for acyclic B.
    """
    m = np.eye(model.p) - model.B
    theta = (m / model.omega[np.newaxis, :]) @ m.T
    return PrecisionMatrix((theta + theta.T) / 2.0)


def covariance_of(model: DagModel) -> CovarianceMatrix:
    """Sigma = (I - B)^-T Omega (I - B)^-1, a population covariance."""
    a = np.linalg.solve(np.eye(model.p) - model.B, np.eye(model.p))
    sigma = a.T @ (model.omega[:, np.newaxis] * a)
    return CovarianceMatrix((sigma + sigma.T) / 2.0, kind="population")


def neg_log_likelihood(theta: PrecisionMatrix, sigma_hat: CovarianceMatrix) -> float:
    """l_n(Theta) = trace(Theta Sigma_n) - log det Theta.

    Minimized over PD matrices at Theta = Sigma_n^-1 when Sigma_n is PD.
    """
    if theta.p != sigma_hat.p:
        raise ValueError(
            f"dimension mismatch: precision is {theta.p}, covariance {sigma_hat.p}"
        )
    trace = float(np.einsum("ij,ji->", theta.matrix, sigma_hat.matrix))
    return trace - chol_logdet(theta.matrix)


def penalized_score(model: DagModel, sigma_hat: CovarianceMatrix, lambda2: float) -> float:
    """l_n(Theta(B, Omega)) + lambda^2 s_B.

    Models with equal precision and equal edge count score identically.
    """
    if lambda2 < 0:
        raise ValueError(f"lambda2 must be >= 0, got {lambda2}")
    return neg_log_likelihood(precision_of(model), sigma_hat) + lambda2 * model.s_edges


def topological_order(B) -> Ordering:
    """Children-first ordering of an edge-weight matrix (or DagModel).

    B[pi, pi] is strictly lower triangular for the result. Deterministic:
    repeatedly emits the smallest-index childless node, which makes the
    result the lexicographically smallest valid ordering. Raises CycleError
    naming one cycle when none exists.
    """
    if isinstance(B, DagModel):
        B = B.B
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {B.shape}")
    p = B.shape[0]
    nonzero = B != 0.0
    # out-degree = number of children; a node is emittable when it reaches 0
    out_deg = nonzero.sum(axis=1).astype(np.int64).tolist()
    ready = [v for v in range(p) if out_deg[v] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for parent in np.nonzero(nonzero[:, v])[0]:
            out_deg[parent] -= 1
            if out_deg[parent] == 0:
                heapq.heappush(ready, int(parent))
    if len(order) < p:
        raise CycleError(_find_cycle(nonzero, set(range(p)) - set(order)))
    return Ordering(tuple(order))


def _find_cycle(nonzero: np.ndarray, remaining: set[int]) -> list[int]:
    # every remaining node has a child in `remaining`; walking child
    # pointers must revisit a node
    start = min(remaining)
    seen: dict[int, int] = {}
    path: list[int] = []
    v = start
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        children = [u for u in np.nonzero(nonzero[v])[0] if int(u) in remaining]
        v = int(children[0])
    cycle = path[seen[v]:] + [v]
    return cycle


def compatible_order(pi: Ordering, B) -> bool:
    """True when every edge (k, j) of B has k later than j in pi."""
    if isinstance(B, DagModel):
        B = B.B
    pos = pi.positions()
    ks, js = np.nonzero(np.asarray(B) != 0.0)
    return bool(np.all(pos[ks] > pos[js]))
