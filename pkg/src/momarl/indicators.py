"""Pareto-front quality indicators: cardinality, hypervolume, expected utility."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from momarl.concepts import non_dominated_mask
from momarl.errors import DimensionMismatch, EmptyFront, EmptyWeights
from momarl.learners.weights import generate_weights

DEFAULT_EU_WEIGHTS = 100


def _front_array(front: Sequence, d: Optional[int] = None) -> np.ndarray:
    rows = [np.asarray(p, dtype=np.float64).reshape(-1) for p in front]
    if not rows:
        return np.zeros((0, d or 0))
    dims = {r.size for r in rows}
    if len(dims) != 1 or (d is not None and dims != {d}):
        raise DimensionMismatch(f"front dimensions {sorted(dims)} vs expected {d}")
    return np.vstack(rows)


def cardinality(front: Sequence) -> int:
    """Number of distinct points in the front."""
    arr = _front_array(front)
    if len(arr) == 0:
        return 0
    return int(len(np.unique(arr, axis=0)))


def hypervolume(front: Sequence, ref) -> float:
    """Exact hypervolume of the region weakly dominated by ``front`` above ``ref``.

    Only points weakly dominating ``ref`` contribute. The volume is computed
    by slicing along the last objective and recursing on the remaining ones,
    with a dedicated sweep for two objectives.
    """
    ref = np.asarray(ref, dtype=np.float64).reshape(-1)
    arr = _front_array(front, ref.size)
    if len(arr) == 0:
        return 0.0
    arr = arr[np.all(arr >= ref, axis=1)]
    if len(arr) == 0:
        return 0.0
    return float(_hv(arr - ref))


def _hv(points: np.ndarray) -> float:
    # points are shifted so the reference is the origin; all coords >= 0
    d = points.shape[1]
    if d == 1:
        return float(points.max())
    points = np.unique(points, axis=0)
    points = points[non_dominated_mask(points)]
    if d == 2:
        order = np.argsort(-points[:, 0], kind="stable")
        xs, ys = points[order, 0], points[order, 1]
        area, best_y = 0.0, 0.0
        for i in range(len(xs)):
            best_y = max(best_y, ys[i])
            nxt = xs[i + 1] if i + 1 < len(xs) else 0.0
            area += (xs[i] - nxt) * best_y
        return area
    order = np.argsort(-points[:, -1], kind="stable")
    pts = points[order]
    volume = 0.0
    for i in range(len(pts)):
        top = pts[i, -1]
        bottom = pts[i + 1, -1] if i + 1 < len(pts) else 0.0
        if top > bottom:
            volume += _hv(pts[: i + 1, :-1]) * (top - bottom)
    return volume


def hypervolume_monte_carlo(front: Sequence, ref, n_samples: int = 1_000_000, seed: int = 0) -> float:
    """Box-sampling estimate of :func:`hypervolume` (test oracle)."""
    ref = np.asarray(ref, dtype=np.float64).reshape(-1)
    arr = _front_array(front, ref.size)
    arr = arr[np.all(arr >= ref, axis=1)] if len(arr) else arr
    if len(arr) == 0:
        return 0.0
    upper = arr.max(axis=0)
    box = float(np.prod(upper - ref))
    if box == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 100_000
    for start in range(0, n_samples, chunk):
        m = min(chunk, n_samples - start)
        s = rng.uniform(ref, upper, size=(m, ref.size))
        covered = np.zeros(m, dtype=bool)
        for p in arr:
            covered |= np.all(s <= p, axis=1)
        hits += int(covered.sum())
    return box * hits / n_samples


def expected_utility(front: Sequence, weights: Optional[Sequence] = None, n_weights: int = DEFAULT_EU_WEIGHTS) -> float:
    """Mean over ``weights`` of the best linear utility reached by the front.

    Without explicit ``weights`` the equally spaced simplex grid of
    ``n_weights`` points is used.
    """
    arr = _front_array(front)
    if len(arr) == 0:
        raise EmptyFront("expected utility of an empty front")
    if weights is None:
        weights = generate_weights(n_weights, arr.shape[1]) if arr.shape[1] > 1 else [np.ones(1)]
    W = _front_array(weights)
    if len(W) == 0:
        raise EmptyWeights("expected utility needs at least one weight vector")
    if W.shape[1] != arr.shape[1]:
        raise DimensionMismatch(f"weights of length {W.shape[1]} for a {arr.shape[1]}-objective front")
    return float(np.mean(np.max(W @ arr.T, axis=1)))
