"""Bitmask bookkeeping for per-node subset tables and ordering enumeration.

Node subsets are encoded as integer masks over bits 0..p-1. Tables indexed
by (node j, parent set S) use a compressed column index in which bit j is
deleted, so each of the p rows has width 2**(p-1).
"""

from __future__ import annotations

import itertools

import numpy as np


def compress(mask: int, j: int) -> int:
    """Drop bit ``j`` from ``mask``, shifting higher bits down by one."""
    return (mask & ((1 << j) - 1)) | ((mask >> (j + 1)) << j)


def expand(cmask: int, j: int) -> int:
    """Inverse of :func:`compress`: reinsert a zero bit at position ``j``."""
    return (cmask & ((1 << j) - 1)) | ((cmask >> j) << (j + 1))


def compress_array(masks: np.ndarray, j) -> np.ndarray:
    """Vectorized :func:`compress`; ``j`` may be a scalar or an array."""
    masks = np.asarray(masks, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    one = np.int64(1)
    return (masks & ((one << j) - one)) | ((masks >> (j + one)) << j)


def mask_of(nodes) -> int:
    m = 0
    for v in nodes:
        m |= 1 << int(v)
    return m


def nodes_of(mask: int) -> tuple[int, ...]:
    out = []
    b = 0
    while mask:
        if mask & 1:
            out.append(b)
        mask >>= 1
        b += 1
    return tuple(out)


def popcounts(size: int) -> np.ndarray:
    """Population counts for all masks in ``range(size)`` (size = 2**w)."""
    pc = np.zeros(size, dtype=np.int64)
    step = 1
    while step < size:
        hi = min(2 * step, size)
        pc[step:hi] = pc[: hi - step] + 1
        step *= 2
    return pc


def bit_reversal_keys(width: int) -> np.ndarray:
    """Key rk[m] = m with its low ``width`` bits reversed.

    Among equal-cardinality masks, the lexicographically smallest node set
    (as a sorted tuple) has the largest key: low bits carry most weight.
    """
    size = 1 << width
    m = np.arange(size, dtype=np.int64)
    rk = np.zeros(size, dtype=np.int64)
    for b in range(width):
        rk |= ((m >> b) & 1) << (width - 1 - b)
    return rk


def all_orderings(p: int) -> np.ndarray:
    """All p! orderings in lexicographic order, shape (p!, p)."""
    perms = np.array(list(itertools.permutations(range(p))), dtype=np.int64)
    return np.ascontiguousarray(perms)


def tail_masks(perms: np.ndarray) -> np.ndarray:
    """For each row, mask of the nodes strictly after position k."""
    bits = (np.int64(1) << perms.astype(np.int64))
    inclusive = np.flip(np.cumsum(np.flip(bits, axis=1), axis=1), axis=1)
    return np.ascontiguousarray(inclusive - bits)
