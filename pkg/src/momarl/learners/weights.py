"""Deterministic simplex weight grids."""

from __future__ import annotations

from math import comb
from typing import Iterator, List, Tuple

import numpy as np

from momarl.errors import InvalidCounts


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Non-negative integer compositions of ``total``, lexicographically descending."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def lattice_resolution(k: int, d: int) -> int:
    """Smallest lattice resolution whose simplex grid holds at least ``k`` points."""
    r = 1
    while comb(r + d - 1, d - 1) < k:
        r += 1
    return r


def generate_weights(k: int, d: int) -> List[np.ndarray]:
    """``k`` equally spaced weight vectors on the ``d``-simplex.

    For ``d == 2`` this is ``(1 - m/(k-1), m/(k-1))`` for ``m = 0..k-1``.
    Larger ``d`` uses the simplex lattice of smallest resolution with at
    least ``k`` points, in descending lexicographic order, truncated to
    ``k``. ``k == 1`` yields the first vertex ``(1, 0, ..., 0)``.
    """
    if int(k) != k or int(d) != d or k < 1 or d < 2:
        raise InvalidCounts(f"need k >= 1 and d >= 2, got k={k}, d={d}")
    k, d = int(k), int(d)
    r = lattice_resolution(k, d)
    out = []
    for comp in _compositions(r, d):
        out.append(np.asarray(comp, dtype=np.float64) / r)
        if len(out) == k:
            break
    return out
