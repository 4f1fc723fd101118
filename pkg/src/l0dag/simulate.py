"""Ground-truth model generators and Gaussian SEM sampling.

All randomness flows through counter-based Philox streams keyed by
SeedSequence, and normal deviates come from the inverse CDF applied to
uniforms, so outputs are reproducible bit for bit across platforms and
worker partitions. The algorithm identifier below is recorded in run
manifests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .model import CovarianceMatrix, DagModel, Dataset, topological_order

GAUSSIAN_ID = "philox4x64-10+inverse-cdf"
# ndtri(u) is finite for u >= 1e-17; Generator.random never returns 1.0
_U_FLOOR = 1e-17

KINDS = ("ar1", "random_sparse", "user")


@dataclass(frozen=True)
class SimConfig:
    """Inputs that fully determine a simulated instance.

    ``coef_range`` is the magnitude range [lo, hi]; signs are random.
    ``omega_range`` of None fixes all noise variances at 1.
    """

    kind: str
    p: int
    n: int
    seed: int = 0
    s0: int | None = None
    beta0: float | None = None
    coef_range: tuple[float, float] = (0.5, 1.0)
    omega_range: tuple[float, float] | None = None
    max_parents: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.p < 1:
            raise ValueError(f"need p >= 1, got {self.p}")
        if self.n < 1:
            raise ValueError(f"need n >= 1, got {self.n}")
        lo, hi = self.coef_range
        if not 0 < lo <= hi:
            raise ValueError(f"need 0 < lo <= hi, got coef_range={self.coef_range}")
        if self.omega_range is not None:
            olo, ohi = self.omega_range
            if not 0 < olo <= ohi:
                raise ValueError(
                    f"need 0 < lo <= hi, got omega_range={self.omega_range}"
                )
        if self.kind == "ar1":
            if self.beta0 is None:
                raise ValueError("kind 'ar1' requires beta0")
        if self.kind == "random_sparse":
            if self.s0 is None:
                raise ValueError("kind 'random_sparse' requires s0")
            if not 0 <= self.s0 <= self.p * (self.p - 1) // 2:
                raise ValueError(
                    f"s0 must lie in [0, p(p-1)/2] = [0, "
                    f"{self.p * (self.p - 1) // 2}], got {self.s0}"
                )


def _rng(seed) -> np.random.Generator:
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(entropy=seed)
    return np.random.Generator(np.random.Philox(seed))


def ar1_model(p: int, beta0: float) -> DagModel:
    """Chain p -> p-1 -> ... -> 1 with weight beta0 on every edge.

    Noise variances are 1 - beta0^2 except at the chain root, so the
    covariance is the unit-diagonal Toeplitz matrix beta0^|i-j|.
    """
    if p < 2:
        raise ValueError(f"need p >= 2, got {p}")
    if abs(beta0) >= 1:
        raise ValueError(f"need |beta0| < 1, got {beta0}")
    B = np.zeros((p, p))
    for child in range(p - 1):
        B[child + 1, child] = beta0
    omega = np.full(p, 1.0 - beta0**2)
    omega[p - 1] = 1.0
    return DagModel(B=B, omega=omega)


def random_sparse_dag(config: SimConfig) -> DagModel:
    """Uniform-ordering DAG with exactly s0 edges and bounded in-degree.

    Draws a uniform children-first ordering, shuffles all order-consistent
    (parent, child) pairs, and fills until s0 edges, skipping children at
    the in-degree cap. The shuffle visits every pair, so the fill reaches
    s0 whenever s0 is within capacity. Draw order is fixed: ordering, pair
    shuffle, magnitudes, signs, noise variances.
    """
    if config.kind != "random_sparse":
        raise ValueError(f"config.kind is {config.kind!r}, not 'random_sparse'")
    p = config.p
    s0 = int(config.s0)
    cap = p - 1 if config.max_parents is None else int(config.max_parents)
    if cap < 0:
        raise ValueError(f"max_parents must be >= 0, got {cap}")
    capacity = sum(min(cap, p - 1 - i) for i in range(p))
    if s0 > capacity:
        raise ValueError(
            f"s0={s0} infeasible: capacity is {capacity} at p={p} with "
            f"in-degree cap {cap}"
        )
    rng = _rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(0,)))
    order = rng.permutation(p)
    pairs = [(i, a) for i in range(p - 1) for a in range(i + 1, p)]
    shuffle = rng.permutation(len(pairs))
    counts = np.zeros(p, dtype=np.int64)
    chosen: list[tuple[int, int]] = []
    for t in shuffle:
        i, a = pairs[int(t)]
        child = int(order[i])
        parent = int(order[a])
        if counts[child] >= cap:
            continue
        counts[child] += 1
        chosen.append((parent, child))
        if len(chosen) == s0:
            break
    lo, hi = config.coef_range
    mags = rng.uniform(lo, hi, size=s0)
    signs = rng.integers(0, 2, size=s0) * 2 - 1
    B = np.zeros((p, p))
    for (parent, child), w in zip(chosen, mags * signs):
        B[parent, child] = w
    if config.omega_range is None:
        omega = np.ones(p)
    else:
        olo, ohi = config.omega_range
        omega = rng.uniform(olo, ohi, size=p)
    return DagModel(B=B, omega=omega)


def model_for(config: SimConfig) -> DagModel:
    """Dispatch on config.kind; 'user' configs carry their own model."""
    if config.kind == "ar1":
        return ar1_model(config.p, config.beta0)
    if config.kind == "random_sparse":
        return random_sparse_dag(config)
    raise ValueError("kind 'user' requires an explicitly supplied model")


def standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Inverse-CDF normals from counter-based uniforms (stable transform)."""
    u = rng.random(shape)
    return ndtri(np.maximum(u, _U_FLOOR))


def sample_sem(model: DagModel, n: int, seed) -> Dataset:
    """n i.i.d. rows of X = X B + E with E column j ~ N(0, omega_j).

    The noise matrix is drawn in one block (column j belongs to node j),
    then columns fill in dependency order, so the draw does not depend on
    the topological order used.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rng = _rng(seed)
    p = model.p
    Z = standard_normal(rng, (n, p))
    X = np.zeros((n, p))
    scale = np.sqrt(model.omega)
    for j in reversed(topological_order(model.B).order):
        parents = np.nonzero(model.B[:, j])[0]
        X[:, j] = scale[j] * Z[:, j]
        if parents.size:
            X[:, j] += X[:, parents] @ model.B[parents, j]
    return Dataset(X=X, seed=seed if isinstance(seed, int) else None)


def sample_covariance(data, center: bool = False) -> CovarianceMatrix:
    """Sigma_n = X^T X / n, uncentered to match the zero-mean model.

    The centered variant subtracts column means but still divides by n.
    """
    X = data.X if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d data matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data contains non-finite entries")
    n = X.shape[0]
    if n < 2:
        raise ValueError(f"need n >= 2 rows, got {n}")
    if center:
        X = X - X.mean(axis=0)
    return CovarianceMatrix(matrix=(X.T @ X) / n, kind="empirical", n=n)
