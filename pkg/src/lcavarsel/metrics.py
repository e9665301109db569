"""Partition agreement by the Hubert-Arabie adjusted Rand index."""

from __future__ import annotations

from math import comb
from typing import Sequence

import numpy as np


def contingency(a: Sequence, b: Sequence) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("partitions must be 1-d and of equal length")
    if a.size == 0:
        raise ValueError("partitions must be non-empty")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia.ravel(), ib.ravel()), 1)
    return table


def ari_from_table(table) -> float:
    """Adjusted Rand index of a contingency table of counts.

    Pair counts are exact integers; the only floating operation is the final
    ratio. When the maximum index equals its expectation (both partitions
    trivial in the same way) the result is 1 if the partitions coincide and
    0 otherwise.
    """
    table = np.asarray(table, dtype=np.int64)
    cells = sum(comb(int(v), 2) for v in table.ravel())
    rows = sum(comb(int(v), 2) for v in table.sum(axis=1))
    cols = sum(comb(int(v), 2) for v in table.sum(axis=0))
    total = comb(int(table.sum()), 2)
    if total == 0:
        return 1.0
    # scale by total to stay in integers: expected = rows * cols / total
    num = cells * total - rows * cols
    den = (rows + cols) * total - 2 * rows * cols
    if den == 0:
        return 1.0 if num == 0 and rows == cols == cells else 0.0
    return float(2 * num / den)


def ari(a: Sequence, b: Sequence) -> float:
    return ari_from_table(contingency(a, b))
