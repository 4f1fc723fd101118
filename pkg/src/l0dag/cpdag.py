"""Markov equivalence classes: CPDAG completion and structural distance.

A mixed graph is stored as an int8 matrix G with G[u, v] = 1 when there is
an edge mark from u to v: G[u, v] = 1, G[v, u] = 0 is the directed edge
u -> v, and marks in both directions make the edge undirected.
"""

from __future__ import annotations

import numpy as np

from .model import DagModel


def cpdag(model_or_B) -> np.ndarray:
    """Completed partially directed graph of a DAG's equivalence class.

    Keeps the skeleton, orients the v-structures, then closes under the
    three orientation propagation rules (no background knowledge, so the
    fourth rule never fires). Non-compelled edges stay undirected.
    """
    B = model_or_B.B if isinstance(model_or_B, DagModel) else np.asarray(model_or_B)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {B.shape}")
    p = B.shape[0]
    directed = B != 0.0
    if np.any(directed & directed.T):
        raise ValueError("two-cycle found; input is not a DAG")
    skeleton = directed | directed.T
    G = skeleton.astype(np.int8)
    for c in range(p):
        pa = np.nonzero(directed[:, c])[0]
        for x in range(pa.size):
            for y in range(x + 1, pa.size):
                a, b = int(pa[x]), int(pa[y])
                if not skeleton[a, b]:
                    G[c, a] = 0
                    G[c, b] = 0
    _meek_closure(G)
    return G


def _meek_closure(G: np.ndarray) -> None:
    # restart after every orientation so no rule reads a stale snapshot
    while _meek_pass(G):
        pass


def _meek_pass(G: np.ndarray) -> bool:
    p = G.shape[0]
    und = (G == 1) & (G.T == 1)
    dirm = (G == 1) & (G.T == 0)
    adj = G.astype(bool) | G.T.astype(bool)
    for b in range(p):
        for c in range(p):
            if not und[b, c]:
                continue
            # R1: a -> b, b - c, a and c non-adjacent  =>  b -> c
            if np.any(dirm[:, b] & ~adj[:, c] & (np.arange(p) != c)):
                G[c, b] = 0
                return True
            # R2: b -> k -> c with b - c  =>  b -> c
            if np.any(dirm[b, :] & dirm[:, c]):
                G[c, b] = 0
                return True
            # R3: b - k1, b - k2, k1 -> c, k2 -> c, k1 and k2
            # non-adjacent  =>  b -> c
            ks = np.nonzero(und[b, :] & dirm[:, c])[0]
            for x in range(ks.size):
                for y in range(x + 1, ks.size):
                    if not adj[ks[x], ks[y]]:
                        G[c, b] = 0
                        return True
    return False


def shd(g1: np.ndarray, g2: np.ndarray) -> int:
    """Structural Hamming distance between two mixed graphs.

    Each unordered pair contributes 1 when its state (absent, u -> v,
    v -> u, undirected) differs between the graphs.
    """
    g1 = np.asarray(g1)
    g2 = np.asarray(g2)
    if g1.shape != g2.shape or g1.ndim != 2:
        raise ValueError(f"shape mismatch: {g1.shape} vs {g2.shape}")
    upper = np.triu_indices(g1.shape[0], 1)
    s1 = g1[upper].astype(np.int64) * 2 + g1.T[upper]
    s2 = g2[upper].astype(np.int64) * 2 + g2.T[upper]
    return int(np.count_nonzero(s1 != s2))


def cpdag_shd(m1: DagModel, m2: DagModel) -> int:
    """Distance between the equivalence classes of two models."""
    if m1.p != m2.p:
        raise ValueError(f"dimension mismatch: p={m1.p} vs p={m2.p}")
    return shd(cpdag(m1), cpdag(m2))
