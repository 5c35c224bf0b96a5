"""Per-subject pair counting shared by all concordance estimators.

For every usable subject ``i`` the kernel counts the subjects ``j`` with
``x_j > x_i`` (comparable), and among those the ones whose score in the
column assigned to ``i`` is strictly larger (concordant) or equal (tied).
Counts are integers, so partitioning the work over threads cannot change
any result.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

BLOCK = 128


def _map(fn, items, threads):
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def comparable_counts(x, usable, key=None):
    """``#{j : x_j > key_i}`` for usable ``i`` (0 elsewhere)."""
    key = x if key is None else key
    sx = np.sort(x)
    out = np.zeros(x.size, dtype=np.int64)
    out[usable] = x.size - np.searchsorted(sx, key[usable], side="right")
    return out


def pair_counts(x: np.ndarray, usable: np.ndarray, col_of: np.ndarray,
                columns: Callable[[np.ndarray], np.ndarray], threads: int = 1,
                strategy: str = "auto", key: np.ndarray = None):
    """Return ``(comparable, concordant, tied)`` int64 arrays of length ``n``.

    ``columns(cols)`` must return the score matrix ``(n, len(cols))`` for the
    requested column ids; a larger score means a larger predicted survival.
    ``key`` is the threshold of subject ``i`` (defaults to ``x``); ``j`` is
    comparable to ``i`` when ``x_j > key_i``.
    """
    key = x if key is None else key
    n = x.size
    idx = np.flatnonzero(usable)
    comparable = comparable_counts(x, usable, key)
    concordant = np.zeros(n, dtype=np.int64)
    tied = np.zeros(n, dtype=np.int64)
    if idx.size == 0:
        return comparable, concordant, tied

    keys = np.stack([col_of[idx].astype(float), key[idx]], axis=1)
    groups, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    if strategy == "auto":
        strategy = "grouped" if groups.shape[0] * 4 <= idx.size else "blocked"

    if strategy == "grouped":
        members = [idx[inverse == g] for g in range(groups.shape[0])]

        def work(g):
            col, x0 = int(groups[g, 0]), groups[g, 1]
            vals = columns(np.array([col]))[:, 0]
            cand = np.sort(vals[x > x0])
            s = vals[members[g]]
            hi = np.searchsorted(cand, s, side="right")
            lo = np.searchsorted(cand, s, side="left")
            return members[g], cand.size - hi, hi - lo

        results = _map(work, list(range(groups.shape[0])), threads)
    elif strategy == "blocked":
        blocks = [idx[k:k + BLOCK] for k in range(0, idx.size, BLOCK)]

        def work(I):
            V = columns(col_of[I])
            s = V[I, np.arange(I.size)]
            later = x[:, None] > key[I][None, :]
            conc = ((V > s[None, :]) & later).sum(axis=0)
            ties = ((V == s[None, :]) & later).sum(axis=0)
            return I, conc, ties

        results = _map(work, blocks, threads)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    for I, conc, ties in results:
        concordant[I] = conc
        tied[I] = ties
    return comparable, concordant, tied
