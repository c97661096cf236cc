"""Pareto, Pareto-Nash and Nash solution concepts.

All objectives are maximised. Dominance uses exact float comparison unless
an explicit ``eps`` is passed to :func:`pareto_compare`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from momarl.errors import (
    EmptyReturns,
    InvalidJointAction,
    LengthMismatch,
    ShapeMismatch,
    UtilityCountMismatch,
)

NASH_TOL = 1e-9


class Dominance(enum.Enum):
    STRICTLY_DOMINATES = "strictly_dominates"
    WEAKLY_DOMINATES = "weakly_dominates"
    EQUAL = "equal"
    DOMINATED_BY = "dominated_by"
    INCOMPARABLE = "incomparable"


class PNDominance(enum.Enum):
    DOMINATES = "dominates"
    DOMINATED_BY = "dominated_by"
    NEITHER = "neither"


def _as_vector(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).reshape(-1)


def _pair(u, v) -> Tuple[np.ndarray, np.ndarray]:
    u, v = _as_vector(u), _as_vector(v)
    if u.shape != v.shape:
        raise LengthMismatch(f"vectors of length {u.size} and {v.size}")
    return u, v


def dominates(u, v) -> bool:
    """Strict Pareto dominance: ``u >= v`` everywhere and ``u > v`` somewhere."""
    u, v = _pair(u, v)
    return bool(np.all(u >= v) and np.any(u > v))


def weakly_dominates(u, v) -> bool:
    """``u >= v`` on every objective (equality included)."""
    u, v = _pair(u, v)
    return bool(np.all(u >= v))


def pareto_compare(u, v, eps: float = 0.0) -> Dominance:
    """Classify the Pareto relation of ``u`` to ``v``.

    With ``eps == 0`` the comparison is exact and ``WEAKLY_DOMINATES`` never
    occurs (a weakly dominating, unequal vector is strictly dominating). With
    ``eps > 0`` differences up to ``eps`` count as ties: if every component is
    within ``eps`` the result is ``WEAKLY_DOMINATES`` when ``u`` is exactly
    ``>= v`` (and unequal), ``EQUAL`` otherwise.
    """
    u, v = _pair(u, v)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps == 0.0:
        ge = np.all(u >= v)
        le = np.all(u <= v)
        if ge and le:
            return Dominance.EQUAL
        if ge:
            return Dominance.STRICTLY_DOMINATES
        if le:
            return Dominance.DOMINATED_BY
        return Dominance.INCOMPARABLE
    diff = u - v
    if np.array_equal(u, v):
        return Dominance.EQUAL
    better = np.any(diff > eps)
    worse = np.any(diff < -eps)
    if better and not worse:
        return Dominance.STRICTLY_DOMINATES
    if worse and not better:
        return Dominance.DOMINATED_BY
    if better and worse:
        return Dominance.INCOMPARABLE
    if np.all(diff >= 0):
        return Dominance.WEAKLY_DOMINATES
    return Dominance.EQUAL


def _stack(vectors: Sequence) -> np.ndarray:
    rows = [_as_vector(v) for v in vectors]
    if not rows:
        return np.zeros((0, 0))
    d = rows[0].size
    if any(r.size != d for r in rows):
        raise LengthMismatch("all vectors must share one length")
    return np.vstack(rows)


def _dedupe(arr: np.ndarray) -> np.ndarray:
    """Unique rows, keeping first-occurrence order."""
    if len(arr) == 0:
        return arr
    _, idx = np.unique(arr, axis=0, return_index=True)
    return arr[np.sort(idx)]


def non_dominated_mask(arr: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Boolean mask of rows not strictly dominated by any other row."""
    n = len(arr)
    keep = np.ones(n, dtype=bool)
    for start in range(0, n, chunk):
        block = arr[start : start + chunk]
        ge = np.all(arr[None, :, :] >= block[:, None, :], axis=2)
        gt = np.any(arr[None, :, :] > block[:, None, :], axis=2)
        keep[start : start + chunk] = ~np.any(ge & gt, axis=1)
    return keep


def pareto_filter(vectors: Sequence) -> List[np.ndarray]:
    """Maximal non-dominated subset; duplicates collapse to one entry."""
    arr = _dedupe(_stack(vectors))
    if len(arr) == 0:
        return []
    return [row.copy() for row in arr[non_dominated_mask(arr)]]


# ---------------------------------------------------------------------------
# Pareto-Nash


def _as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatch(f"value matrix must be 2-D (agents x objectives), got shape {arr.shape}")
    return arr


def pareto_nash_compare(U, V) -> PNDominance:
    """Row-wise dominance between two value matrices (one row per agent)."""
    U, V = _as_matrix(U), _as_matrix(V)
    if U.shape != V.shape:
        raise ShapeMismatch(f"{U.shape} vs {V.shape}")
    u_ge = np.all(U >= V, axis=1)
    v_ge = np.all(V >= U, axis=1)
    u_strict = u_ge & np.any(U > V, axis=1)
    v_strict = v_ge & np.any(V > U, axis=1)
    if np.all(u_ge) and np.any(u_strict):
        return PNDominance.DOMINATES
    if np.all(v_ge) and np.any(v_strict):
        return PNDominance.DOMINATED_BY
    return PNDominance.NEITHER


def pareto_nash_filter(matrices: Sequence) -> List[np.ndarray]:
    mats = [_as_matrix(m) for m in matrices]
    if not mats:
        return []
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise ShapeMismatch("all value matrices must share one shape")
    flat = _dedupe(np.stack(mats).reshape(len(mats), -1))
    cube = flat.reshape(len(flat), *shape)
    # row-wise weak dominance of j over i, with at least one strict row
    ge = np.all(cube[None, :, :, :] >= cube[:, None, :, :], axis=3)
    gt = ge & np.any(cube[None, :, :, :] > cube[:, None, :, :], axis=3)
    dominated = np.any(np.all(ge, axis=2) & np.any(gt, axis=2), axis=1)
    return [m.copy() for m in cube[~dominated]]


# ---------------------------------------------------------------------------
# normal-form games


@dataclass
class Monfg:
    """Multi-objective normal-form game.

    ``payoffs`` has shape ``(*action_counts, n_agents, d)``: for each joint
    action, the value matrix of all agents.
    """

    payoffs: np.ndarray

    def __post_init__(self):
        self.payoffs = np.asarray(self.payoffs, dtype=np.float64)
        if self.payoffs.ndim < 4:
            raise ShapeMismatch("payoff tensor needs at least two agents")
        n = self.payoffs.ndim - 2
        if self.payoffs.shape[-2] != n:
            raise ShapeMismatch(f"{n} action axes but {self.payoffs.shape[-2]} payoff rows")

    @property
    def n_agents(self) -> int:
        return self.payoffs.ndim - 2

    @property
    def action_counts(self) -> Tuple[int, ...]:
        return tuple(self.payoffs.shape[:-2])

    @property
    def num_objectives(self) -> int:
        return self.payoffs.shape[-1]

    def value(self, joint: Sequence[int]) -> np.ndarray:
        return self.payoffs[tuple(joint)]

    def joint_actions(self) -> Iterable[Tuple[int, ...]]:
        return product(*(range(k) for k in self.action_counts))


@dataclass
class NashCheck:
    is_equilibrium: bool
    best_deviations: Dict[int, int] = field(default_factory=dict)
    gains: Dict[int, float] = field(default_factory=dict)

    def __iter__(self):
        yield self.is_equilibrium
        yield self.best_deviations

    def __bool__(self) -> bool:
        return self.is_equilibrium


def check_nash(game: Monfg, utilities: Sequence, joint: Sequence[int], tol: float = NASH_TOL) -> NashCheck:
    """Pure-strategy Nash test under linear utilities ``w_i . v_i``.

    ``best_deviations`` maps every agent that can gain more than ``tol`` to
    its largest-gain alternative action.
    """
    joint = tuple(int(a) for a in joint)
    if len(joint) != game.n_agents or any(not 0 <= a < k for a, k in zip(joint, game.action_counts)):
        raise InvalidJointAction(f"{joint} is not a joint action of a game with {game.action_counts}")
    if len(utilities) != game.n_agents:
        raise UtilityCountMismatch(f"{len(utilities)} utilities for {game.n_agents} agents")
    ws = [_as_vector(w) for w in utilities]
    if any(w.size != game.num_objectives for w in ws):
        raise LengthMismatch("utility weight length must equal the objective count")
    base = game.value(joint)
    result = NashCheck(True)
    for i, w in enumerate(ws):
        current = float(w @ base[i])
        alternatives = list(joint)
        best_gain, best_action = tol, None
        for a in range(game.action_counts[i]):
            if a == joint[i]:
                continue
            alternatives[i] = a
            gain = float(w @ game.value(alternatives)[i]) - current
            if gain > best_gain:
                best_gain, best_action = gain, a
        if best_action is not None:
            result.is_equilibrium = False
            result.best_deviations[i] = best_action
            result.gains[i] = best_gain
    return result


def pure_nash_equilibria(game: Monfg, utilities: Sequence) -> List[Tuple[int, ...]]:
    return [j for j in game.joint_actions() if check_nash(game, utilities, j).is_equilibrium]


# ---------------------------------------------------------------------------
# scalarisation


def scalarise_returns(episode_returns: Sequence, w, criterion: str = "SER") -> float:
    """Linear utility under SER (utility of the mean) or ESR (mean utility)."""
    if len(episode_returns) == 0:
        raise EmptyReturns("need at least one episode return")
    R = _stack(episode_returns)
    w = _as_vector(w)
    if w.size != R.shape[1]:
        raise LengthMismatch(f"weights of length {w.size} for {R.shape[1]} objectives")
    criterion = criterion.upper()
    if criterion == "SER":
        return float(w @ R.mean(axis=0))
    if criterion == "ESR":
        return float(np.mean(R @ w))
    raise ValueError(f"criterion must be SER or ESR, got {criterion!r}")


# ---------------------------------------------------------------------------
# archive


class ParetoArchive:
    """Mutually non-dominated ``(value vector, tag)`` pairs.

    A candidate equal to or dominated by a stored vector is rejected (the
    earliest of equal vectors is kept); accepted candidates evict the entries
    they strictly dominate.
    """

    def __init__(self):
        self._vectors: List[np.ndarray] = []
        self._tags: List[Any] = []

    def add(self, vector, tag: Any = None) -> bool:
        v = _as_vector(vector).copy()
        if self._vectors and v.size != self._vectors[0].size:
            raise LengthMismatch("archive vectors must share one length")
        for u in self._vectors:
            if np.all(u >= v):
                return False
        keep = [i for i, u in enumerate(self._vectors) if not (np.all(v >= u) and np.any(v > u))]
        self._vectors = [self._vectors[i] for i in keep]
        self._tags = [self._tags[i] for i in keep]
        self._vectors.append(v)
        self._tags.append(tag)
        return True

    @property
    def vectors(self) -> List[np.ndarray]:
        return [v.copy() for v in self._vectors]

    @property
    def tags(self) -> List[Any]:
        return list(self._tags)

    def as_set(self) -> frozenset:
        return frozenset(tuple(v.tolist()) for v in self._vectors)

    def __len__(self) -> int:
        return len(self._vectors)

    def __iter__(self):
        return iter(zip(self.vectors, self._tags))

    def __repr__(self) -> str:
        return f"ParetoArchive({[v.tolist() for v in self._vectors]})"
