"""MO-GemMining: cooperative multi-objective multi-agent bandit.

Villages (agents) send their workers to one of a contiguous range of mines.
For a mine visited by ``w`` workers in total, gem type ``o`` is found with
probability ``x[mine, o] * bonus ** (w - 1)``; when the per-mine total over
types exceeds ``cap`` every type is rescaled proportionally so the total is
``cap``. Each type is then drawn independently. The team reward counts
gems of each type over all mines, and every episode is a single day.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from momarl.core import Discrete, ParallelEnv, StepOutput, derive_rng
from momarl.errors import IllegalMineChoice, InvalidLimits


@dataclass(frozen=True)
class MiningInstance:
    workers: Tuple[int, ...]
    first_mine: Tuple[int, ...]
    n_connections: Tuple[int, ...]
    base_probs: np.ndarray  # mines x gem types
    bonus: float = 1.03
    cap: float = 0.9

    def __post_init__(self):
        if not 0 < self.cap <= 1:
            raise InvalidLimits(f"truncation probability must be in (0, 1], got {self.cap}")
        if self.bonus < 1:
            raise InvalidLimits(f"bonus factor must be >= 1, got {self.bonus}")
        if np.any(self.base_probs < 0):
            raise InvalidLimits("base probabilities must be non-negative")

    @property
    def n_villages(self) -> int:
        return len(self.workers)

    @property
    def n_mines(self) -> int:
        return self.base_probs.shape[0]

    @property
    def n_types(self) -> int:
        return self.base_probs.shape[1]

    def mines_of(self, village: int) -> range:
        return range(self.first_mine[village], self.first_mine[village] + self.n_connections[village])


def gem_generate(
    seed: int,
    n_villages: int,
    n_types: int = 2,
    worker_limits: Tuple[int, int] = (1, 5),
    connection_limits: Tuple[int, int] = (2, 4),
    base_prob_limits: Tuple[float, float] = (0.01, 0.2),
    bonus: float = 1.03,
    cap: float = 0.9,
) -> MiningInstance:
    """Random instance; village ``i`` connects to mines ``i .. i + m_i - 1``.

    The last village gets the maximum connection count, so there are
    ``n_villages + max_connections - 1`` mines.
    """
    if n_villages < 2:
        raise InvalidLimits(f"need at least 2 villages, got {n_villages}")
    (wlo, whi), (clo, chi), (plo, phi) = worker_limits, connection_limits, base_prob_limits
    if not (1 <= wlo <= whi and 1 <= clo <= chi and 0 <= plo <= phi):
        raise InvalidLimits(f"bad limits workers={worker_limits} connections={connection_limits} probs={base_prob_limits}")
    if n_types < 1:
        raise InvalidLimits("need at least one gem type")
    rng = derive_rng(seed, "instance")
    workers = tuple(int(w) for w in rng.integers(wlo, whi + 1, size=n_villages))
    conns = [int(c) for c in rng.integers(clo, chi + 1, size=n_villages)]
    conns[-1] = chi
    n_mines = n_villages + chi - 1
    base = rng.uniform(plo, phi, size=(n_mines, n_types))
    return MiningInstance(workers, tuple(range(n_villages)), tuple(conns), base, bonus, cap)


def _mine_vector(inst: MiningInstance, joint: Union[Mapping[int, int], Sequence[int]]) -> np.ndarray:
    choices = [joint[v] for v in range(inst.n_villages)] if isinstance(joint, Mapping) else list(joint)
    if len(choices) != inst.n_villages:
        raise IllegalMineChoice(f"{len(choices)} choices for {inst.n_villages} villages")
    for v, m in enumerate(choices):
        if int(m) not in inst.mines_of(v):
            raise IllegalMineChoice(f"village {v} cannot reach mine {m}")
    return np.asarray(choices, dtype=np.int64)


def gem_probabilities(inst: MiningInstance, joint: Union[Mapping[int, int], Sequence[int]]) -> np.ndarray:
    """Per-mine, per-type find probabilities for a joint choice of (absolute) mines."""
    mines = _mine_vector(inst, joint)
    w = np.bincount(mines, weights=np.asarray(inst.workers, dtype=np.float64), minlength=inst.n_mines)
    probs = np.zeros_like(inst.base_probs)
    busy = w > 0
    probs[busy] = inst.base_probs[busy] * inst.bonus ** (w[busy, None] - 1)
    totals = probs.sum(axis=1)
    over = totals > inst.cap
    probs[over] *= (inst.cap / totals[over])[:, None]
    return probs


def gem_expected_reward(inst: MiningInstance, joint) -> np.ndarray:
    return gem_probabilities(inst, joint).sum(axis=0)


def gem_step(inst: MiningInstance, joint, rng: np.random.Generator) -> np.ndarray:
    probs = gem_probabilities(inst, joint)
    found = rng.random(probs.shape) < probs
    return found.sum(axis=0).astype(np.float64)


class GemMiningEnv(ParallelEnv):
    """Parallel MO-GemMining; agent ``village_i`` picks a mine offset in ``0..m_i-1``."""

    metadata = {"name": "mo_gem_mining"}
    team_reward = True

    def __init__(
        self,
        n_villages: int = 5,
        n_types: int = 2,
        instance_seed: int = 0,
        worker_limits: Tuple[int, int] = (1, 5),
        connection_limits: Tuple[int, int] = (2, 4),
        base_prob_limits: Tuple[float, float] = (0.01, 0.2),
        bonus: float = 1.03,
        cap: float = 0.9,
        instance: Optional[MiningInstance] = None,
    ):
        self.instance = instance or gem_generate(
            instance_seed, n_villages, n_types, tuple(worker_limits), tuple(connection_limits),
            tuple(base_prob_limits), bonus, cap,
        )
        inst = self.instance
        self.possible_agents = [f"village_{i}" for i in range(inst.n_villages)]
        self.num_objectives = inst.n_types
        self._spaces = {a: Discrete(inst.n_connections[i]) for i, a in enumerate(self.possible_agents)}
        self._obs_space = Discrete(1)

    def observation_space(self, agent):
        return self._obs_space

    def action_space(self, agent):
        return self._spaces[agent]

    def reward_bounds(self, agent):
        d = self.num_objectives
        return np.zeros(d), np.full(d, float(self.instance.n_mines))

    def absolute_joint(self, actions: Mapping[str, int]) -> np.ndarray:
        return np.asarray(
            [self.instance.first_mine[i] + int(actions[a]) for i, a in enumerate(self.possible_agents)]
        )

    def expected_reward(self, actions: Mapping[str, int]) -> np.ndarray:
        """Analytic expected team reward of a joint action (mine offsets)."""
        return gem_expected_reward(self.instance, self.absolute_joint(actions))

    def joint_actions(self):
        for combo in product(*(range(self._spaces[a].n) for a in self.possible_agents)):
            yield dict(zip(self.possible_agents, combo))

    def _reset(self, options):
        return {a: 0 for a in self.agents}, {a: {} for a in self.agents}

    def _step(self, actions):
        reward = gem_step(self.instance, self.absolute_joint(actions), self.np_random("transition"))
        agents = self.agents
        return StepOutput(
            {a: 0 for a in agents},
            {a: reward.copy() for a in agents},
            {a: True for a in agents},
            {a: False for a in agents},
            {a: {} for a in agents},
        )

    def state(self):
        return (self.instance.base_probs, self.instance.workers, list(self.agents))
