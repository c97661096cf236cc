"""Scalarised independent Q-learning.

Every agent learns its own Q-table on the scalar reward ``w_i . r_i`` with
epsilon-greedy exploration and random tie-breaking. The tables of all
agents live in one array so that a step updates every agent at once, which
keeps thousands-of-agents congestion games cheap.
"""

from __future__ import annotations

from typing import Any, Callable, Dict, Hashable, List, Mapping, Optional, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator

from momarl.core import Box, Discrete, ParallelEnv, Space, Tuple_, derive_rng
from momarl.errors import NonDiscreteObservation, WeightLengthMismatch


def observation_key_fn(space: Space) -> Callable[[Any], Hashable]:
    """Map observations of a discrete-valued space to hashable table keys."""
    if isinstance(space, Discrete):
        return int
    if isinstance(space, Box) and np.issubdtype(np.dtype(space.dtype), np.integer):
        return lambda o: tuple(np.asarray(o, dtype=np.int64).ravel().tolist())
    if isinstance(space, Tuple_):
        parts = [observation_key_fn(s) for s in space.spaces]
        return lambda o: tuple(f(v) for f, v in zip(parts, o))
    raise NonDiscreteObservation(
        f"tabular learners need discrete observations, got {space!r}; use a discretising wrapper"
    )


class TabularPolicy:
    """Greedy joint policy read from per-agent Q-tables.

    ``q_tables[agent][key]`` is the action-value vector of that observation.
    Unseen observations fall back to action 0; ties pick the lowest action.
    """

    def __init__(self, q_tables: Dict[str, Dict[Hashable, np.ndarray]], key_fns: Dict[str, Callable], n_actions: Dict[str, int]):
        self.q_tables = q_tables
        self.key_fns = key_fns
        self.n_actions = n_actions
        self._greedy = {
            a: {k: int(np.argmax(q[: n_actions[a]])) for k, q in table.items()} for a, table in q_tables.items()
        }

    def act(self, agent: str, observation: Any) -> int:
        return self._greedy[agent].get(self.key_fns[agent](observation), 0)

    __call__ = act

    def joint_action(self, observations: Mapping[str, Any]) -> Dict[str, int]:
        return {a: self.act(a, o) for a, o in observations.items()}

    def table(self, agent: str) -> Dict[Hashable, int]:
        return dict(self._greedy[agent])


class _QStore:
    """Q-values of all agents in one ``(agents, rows, actions)`` array."""

    def __init__(self, n_agents: int, n_actions: int, capacity: int = 4):
        self.q = np.zeros((n_agents, capacity, n_actions))
        self.rows: List[Dict[Hashable, int]] = [dict() for _ in range(n_agents)]

    def row(self, i: int, key: Hashable) -> int:
        table = self.rows[i]
        r = table.get(key)
        if r is None:
            r = table[key] = len(table)
            if r >= self.q.shape[1]:
                grown = np.zeros((self.q.shape[0], 2 * self.q.shape[1], self.q.shape[2]))
                grown[:, : self.q.shape[1]] = self.q
                self.q = grown
        return r


def _weight_matrix(env: ParallelEnv, weights) -> np.ndarray:
    agents, d = env.possible_agents, env.num_objectives
    if weights is None:
        if d != 1:
            raise WeightLengthMismatch(f"weights required for {d} objectives")
        return np.ones((len(agents), 1))
    if isinstance(weights, Mapping):
        rows = [np.asarray(weights[a], dtype=np.float64).ravel() for a in agents]
    else:
        rows = [np.asarray(weights, dtype=np.float64).ravel()] * len(agents)
    W = np.stack(rows)
    if W.shape[1] != d:
        raise WeightLengthMismatch(f"weights of length {W.shape[1]} for {d} objectives")
    return W


class IndependentQLearning(BaseEstimator):
    """Independent epsilon-greedy Q-learners on linearly scalarised rewards.

    Learning and exploration rates decay multiplicatively once per episode
    down to their minimum. After ``fit``:

    * ``policy_``: greedy :class:`TabularPolicy`;
    * ``learning_curve_``: per-episode undiscounted scalarised return, averaged
      over agents;
    * ``vector_returns_``: per-episode return vectors averaged over agents;
    * ``metrics_``: per-episode values of the ``metrics`` callables.
    """

    def __init__(
        self,
        alpha: float = 0.5,
        alpha_decay: float = 1.0,
        alpha_min: float = 0.0,
        epsilon: float = 0.05,
        epsilon_decay: float = 0.9999,
        epsilon_min: float = 0.0,
        gamma: float = 0.9,
        n_episodes: int = 1000,
        seed: int = 0,
    ):
        self.alpha = alpha
        self.alpha_decay = alpha_decay
        self.alpha_min = alpha_min
        self.epsilon = epsilon
        self.epsilon_decay = epsilon_decay
        self.epsilon_min = epsilon_min
        self.gamma = gamma
        self.n_episodes = n_episodes
        self.seed = seed

    def _validate(self):
        for name in ("alpha", "epsilon", "gamma", "alpha_decay", "epsilon_decay", "alpha_min", "epsilon_min"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.n_episodes < 0:
            raise ValueError("n_episodes must be >= 0")

    def fit(
        self,
        env: ParallelEnv,
        weights: Union[None, Sequence[float], np.ndarray, Mapping[str, Any]] = None,
        metrics: Optional[Mapping[str, Callable[[ParallelEnv], float]]] = None,
        callback: Optional[Callable[[int, "IndependentQLearning"], None]] = None,
    ) -> "IndependentQLearning":
        self._validate()
        agents = list(env.possible_agents)
        index = {a: i for i, a in enumerate(agents)}
        key_fns = {a: observation_key_fn(env.observation_space(a)) for a in agents}
        spaces = [env.action_space(a) for a in agents]
        if not all(isinstance(s, Discrete) for s in spaces):
            raise TypeError("tabular Q-learning needs Discrete action spaces")
        n_act = np.array([s.n for s in spaces])
        A = int(n_act.max())
        valid = np.arange(A)[None, :] < n_act[:, None]
        W = _weight_matrix(env, weights)
        store = _QStore(len(agents), A)
        rng = derive_rng(self.seed, "iql")
        alpha, eps = float(self.alpha), float(self.epsilon)
        metrics = dict(metrics or {})
        curve, vec_curve = [], []
        self.metrics_ = {name: [] for name in metrics}

        for episode in range(self.n_episodes):
            obs, _ = env.reset(seed=int(derive_rng(self.seed, "episodes").integers(2**31)) if episode == 0 else None)
            ret = np.zeros((len(agents), env.num_objectives))
            prev_live, s2 = None, None
            while env.agents:
                live = list(env.agents)
                ii = np.fromiter((index[a] for a in live), dtype=np.int64, count=len(live))
                if live == prev_live:
                    s = s2
                else:
                    s = np.fromiter((store.row(index[a], key_fns[a](obs[a])) for a in live), dtype=np.int64, count=len(live))
                q = np.where(valid[ii], store.q[ii, s], -np.inf)
                ties = q == q.max(axis=1, keepdims=True)
                greedy = np.argmax(np.where(ties, rng.random(q.shape), -1.0), axis=1)
                explore = rng.random(len(live)) < eps
                uniform = (rng.random(len(live)) * n_act[ii]).astype(np.int64)
                act = np.where(explore, uniform, greedy)
                out = env.step({a: int(act[k]) for k, a in enumerate(live)})
                R = np.stack([out.rewards[a] for a in live])
                ret[ii] += R
                r = np.einsum("ij,ij->i", R, W[ii])
                term = np.fromiter((bool(out.terminations[a]) for a in live), dtype=bool, count=len(live))
                s2 = np.fromiter(
                    (store.row(index[a], key_fns[a](out.observations[a])) for a in live), dtype=np.int64, count=len(live)
                )
                # table may have grown while indexing the new observations
                Q = store.q
                boot = np.where(valid[ii], Q[ii, s2], -np.inf).max(axis=1)
                target = r + self.gamma * np.where(term, 0.0, boot)
                Q[ii, s, act] += alpha * (target - Q[ii, s, act])
                obs, prev_live = out.observations, live
            scal = np.einsum("ij,ij->i", ret, W)
            curve.append(float(scal.mean()))
            vec_curve.append(ret.mean(axis=0))
            for name, fn in metrics.items():
                self.metrics_[name].append(float(fn(env)))
            alpha = max(self.alpha_min, alpha * self.alpha_decay)
            eps = max(self.epsilon_min, eps * self.epsilon_decay)
            if callback is not None:
                self._store(store, agents, key_fns, n_act)
                callback(episode, self)

        self._store(store, agents, key_fns, n_act)
        self.learning_curve_ = np.asarray(curve)
        self.vector_returns_ = np.asarray(vec_curve).reshape(len(curve), env.num_objectives)
        self.metrics_ = {k: np.asarray(v) for k, v in self.metrics_.items()}
        self.final_alpha_, self.final_epsilon_ = alpha, eps
        return self

    def _store(self, store: _QStore, agents, key_fns, n_act):
        q_tables = {
            a: {key: store.q[i, r, : n_act[i]].copy() for key, r in store.rows[i].items()} for i, a in enumerate(agents)
        }
        self.q_tables_ = q_tables
        self.policy_ = TabularPolicy(q_tables, key_fns, {a: int(n) for a, n in zip(agents, n_act)})
