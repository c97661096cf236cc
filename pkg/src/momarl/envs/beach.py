"""MO-BPD: multi-objective beach problem domain.

Tourists of type A or B move between adjacent beach sections. Rewards
arrive only on the final timestep: the capacity objective
``L_cap(b) = x_b * exp(-x_b / psi_b)`` and the mixture objective
``L_mix(b) = min(|A_b|, |B_b|) / (|A_b| + |B_b|)`` of the agent's section
(individual mode), or their sums over all sections (team mode).
"""

from __future__ import annotations

from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from momarl.core import Box, Discrete, ParallelEnv, StepOutput
from momarl.wrappers import ParallelWrapper

MOVE_LEFT, STAY_STILL, MOVE_RIGHT = 0, 1, 2
TYPE_A, TYPE_B = 0, 1


def beach_section_rewards(count_a, count_b, capacity) -> Tuple[np.ndarray, np.ndarray, float, float]:
    """Per-section ``(L_cap, L_mix)`` arrays and global ``(G_cap, G_mix)``."""
    count_a = np.asarray(count_a, dtype=np.float64)
    count_b = np.asarray(count_b, dtype=np.float64)
    psi = np.broadcast_to(np.asarray(capacity, dtype=np.float64), count_a.shape)
    x = count_a + count_b
    l_cap = x * np.exp(-x / psi)
    l_mix = np.divide(np.minimum(count_a, count_b), x, out=np.zeros_like(x), where=x > 0)
    return l_cap, l_mix, float(l_cap.sum()), float(l_mix.sum())


def _spread_types(n_agents: int, n_b: int) -> np.ndarray:
    # B agents spaced evenly through the index range
    i = np.arange(n_agents)
    return ((i + 1) * n_b // n_agents - i * n_b // n_agents).astype(np.int64)


class BeachEnv(ParallelEnv):
    """Parallel MO-BPD.

    ``type_distribution`` gives the (A, B) fractions and
    ``position_distribution`` maps a start section to the fraction of agents
    starting there (filled in agent order). The default observation is
    ``[section, type, count_A per section..., count_B per section...]``;
    wrap with :class:`BeachCompatObservation` for the ``(section, type)``
    tabular view.
    """

    metadata = {"name": "mo_beach"}

    def __init__(
        self,
        n_agents: int = 50,
        sections: int = 5,
        capacity: Union[float, Sequence[float]] = 3,
        type_distribution: Sequence[float] = (0.7, 0.3),
        position_distribution: Optional[Mapping[int, float]] = None,
        horizon: int = 5,
        reward_mode: str = "individual",
    ):
        if reward_mode not in ("individual", "team"):
            raise ValueError(f"reward_mode must be 'individual' or 'team', got {reward_mode!r}")
        if horizon < 1 or sections < 1 or n_agents < 1:
            raise ValueError("n_agents, sections and horizon must be >= 1")
        self.n_sections = int(sections)
        self.capacity = np.broadcast_to(np.asarray(capacity, dtype=np.float64), (self.n_sections,)).copy()
        if np.any(self.capacity <= 0):
            raise ValueError("section capacities must be positive")
        self.horizon = int(horizon)
        self.reward_mode = reward_mode
        self.team_reward = reward_mode == "team"
        self.num_objectives = 2
        self.possible_agents = [f"agent_{i}" for i in range(n_agents)]
        n_b = int(round(n_agents * type_distribution[1] / sum(type_distribution)))
        self.types = _spread_types(n_agents, n_b)
        if position_distribution is None:
            position_distribution = {1: 0.5, 3: 0.5} if self.n_sections > 3 else {0: 1.0}
        self.start_positions = self._start_positions(n_agents, position_distribution)
        self._index = {a: i for i, a in enumerate(self.possible_agents)}
        self._act_space = Discrete(3)
        self._obs_space = Box(
            np.zeros(2 + 2 * self.n_sections),
            np.concatenate([[self.n_sections - 1, 1], np.full(2 * self.n_sections, n_agents)]),
        )

    def _start_positions(self, n, dist) -> np.ndarray:
        items = sorted((int(k), float(v)) for k, v in dist.items())
        if any(not 0 <= k < self.n_sections for k, _ in items):
            raise ValueError(f"start sections must be in 0..{self.n_sections - 1}")
        total = sum(v for _, v in items)
        bounds = np.round(np.cumsum([v / total for _, v in items]) * n).astype(int)
        pos = np.empty(n, dtype=np.int64)
        lo = 0
        for (k, _), hi in zip(items, bounds):
            pos[lo:hi] = k
            lo = hi
        pos[lo:] = items[-1][0]
        return pos

    def observation_space(self, agent):
        return self._obs_space

    def action_space(self, agent):
        return self._act_space

    def reward_bounds(self, agent):
        if self.team_reward:
            return np.zeros(2), np.array([float(np.sum(self.capacity) / np.e), self.n_sections * 0.5])
        return np.zeros(2), np.array([float(np.max(self.capacity) / np.e), 0.5])

    def counts(self) -> Tuple[np.ndarray, np.ndarray]:
        s = self.n_sections
        return (
            np.bincount(self.positions[self.types == TYPE_A], minlength=s),
            np.bincount(self.positions[self.types == TYPE_B], minlength=s),
        )

    def _observations(self):
        ca, cb = self.counts()
        shared = np.concatenate([ca, cb]).astype(np.float64)
        return {
            a: np.concatenate([[self.positions[i], self.types[i]], shared])
            for a, i in ((a, self._index[a]) for a in self.agents)
        }

    def _reset(self, options):
        self.positions = self.start_positions.copy()
        self.t = 0
        self.last_global_reward = np.zeros(2)
        return self._observations(), {a: {} for a in self.agents}

    def _step(self, actions):
        agents = self.agents
        moves = np.fromiter((actions[a] for a in agents), dtype=np.int64, count=len(agents)) - 1
        self.positions = np.clip(self.positions + moves, 0, self.n_sections - 1)
        self.t += 1
        final = self.t >= self.horizon
        obs = self._observations()
        zero = np.zeros(2)
        infos = {a: {} for a in agents}
        if not final:
            rewards = {a: zero.copy() for a in agents}
        else:
            ca, cb = self.counts()
            l_cap, l_mix, g_cap, g_mix = beach_section_rewards(ca, cb, self.capacity)
            self.last_global_reward = np.array([g_cap, g_mix])
            if self.team_reward:
                rewards = {a: self.last_global_reward.copy() for a in agents}
            else:
                rewards = {}
                for a in agents:
                    b = self.positions[self._index[a]]
                    rewards[a] = np.array([l_cap[b], l_mix[b]])
            for a in agents:
                infos[a] = {"global_reward": self.last_global_reward.copy()}
        flags = {a: final for a in agents}
        return StepOutput(obs, rewards, flags, {a: False for a in agents}, infos)

    def state(self):
        return (self.positions, self.t)


def beach_compat_observation(env: BeachEnv, agent: str) -> int:
    """Tabular view ``section * 2 + type``."""
    i = env._index[agent]
    return int(env.positions[i] * 2 + env.types[i])


class BeachCompatObservation(ParallelWrapper):
    """Observation-only wrapper reducing each observation to ``(section, type)``."""

    def __init__(self, env: BeachEnv):
        super().__init__(env)
        self._space = Discrete(2 * env.unwrapped.n_sections)

    def observation_space(self, agent):
        return self._space

    def reset(self, seed=None, options=None):
        obs, infos = self.env.reset(seed=seed, options=options)
        return {a: beach_compat_observation(self.env.unwrapped, a) for a in obs}, infos

    def step(self, actions):
        out = self.env.step(actions)
        base = self.env.unwrapped
        out.observations = {a: beach_compat_observation(base, a) for a in out.observations}
        return out
