"""Reward wrappers and multi-agent centralisation.

Wrappers never touch transition dynamics: they forward ``reset``/``step``
to the wrapped environment and rewrite only rewards (or, for
:class:`CentraliseAgent`, the agent dimension).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Sequence, Union

import numpy as np

from momarl.core import Box, Discrete, ParallelEnv, Space, StepOutput, Tuple_
from momarl.errors import IndexOutOfRange, UnknownAgent, WeightLengthMismatch

CENTRAL_AGENT = "central"


class ParallelWrapper(ParallelEnv):
    def __init__(self, env: ParallelEnv):
        self.env = env
        self.possible_agents = list(env.possible_agents)
        self.num_objectives = env.num_objectives
        self.team_reward = env.team_reward
        self.metadata = dict(env.metadata)

    def __getattr__(self, name: str) -> Any:
        # only reached for attributes not found on the wrapper itself
        if name.startswith("__") or name == "env":
            raise AttributeError(name)
        return getattr(self.env, name)

    @property
    def agents(self):
        return self.env.agents

    @property
    def unwrapped(self) -> ParallelEnv:
        return self.env.unwrapped

    def observation_space(self, agent):
        return self.env.observation_space(agent)

    def action_space(self, agent):
        return self.env.action_space(agent)

    def reward_bounds(self, agent):
        return self.env.reward_bounds(agent)

    def reset(self, seed=None, options=None):
        return self.env.reset(seed=seed, options=options)

    def step(self, actions) -> StepOutput:
        out = self.env.step(actions)
        out.rewards = {a: self._reward(a, r) for a, r in out.rewards.items()}
        return out

    def _reward(self, agent, r: np.ndarray) -> np.ndarray:
        return r

    def _reset(self, options):  # pragma: no cover - reset() is overridden
        raise NotImplementedError

    def _step(self, actions):  # pragma: no cover - step() is overridden
        raise NotImplementedError

    def state(self):
        return self.env.state()

    def state_fingerprint(self) -> str:
        return self.env.state_fingerprint()


@dataclass(frozen=True)
class NormalisationSpec:
    """Affine map of one reward component from ``[low, high]`` to ``[0, 1]``."""

    agent: str
    idx: int
    low: float
    high: float

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError(f"normalisation needs low < high, got [{self.low}, {self.high}]")


class NormaliseReward(ParallelWrapper):
    """Rescale reward component ``idx`` of ``agent`` by known per-step bounds."""

    def __init__(self, env: ParallelEnv, spec: Optional[NormalisationSpec] = None, *, agent=None, idx=None, low=None, high=None):
        super().__init__(env)
        if spec is None:
            spec = NormalisationSpec(agent, int(idx), float(low), float(high))
        if spec.agent not in env.possible_agents:
            raise UnknownAgent(f"cannot normalise rewards of unknown agent {spec.agent!r}")
        if not 0 <= spec.idx < env.num_objectives:
            raise IndexOutOfRange(f"objective index {spec.idx} outside 0..{env.num_objectives - 1}")
        self.spec = spec

    def _reward(self, agent, r):
        if agent != self.spec.agent:
            return r
        r = np.array(r, dtype=np.float64)
        s = self.spec
        r[s.idx] = (r[s.idx] - s.low) / (s.high - s.low)
        return r


def normalise_rewards(env: ParallelEnv, specs: Sequence[NormalisationSpec]) -> ParallelEnv:
    for spec in specs:
        env = NormaliseReward(env, spec)
    return env


class LineariseReward(ParallelWrapper):
    """Replace each agent's reward vector by the scalar ``w_i . r_i`` (length 1)."""

    def __init__(self, env: ParallelEnv, weights: Union[Mapping[str, Any], Sequence[float], np.ndarray]):
        super().__init__(env)
        if not isinstance(weights, Mapping):
            weights = {a: weights for a in env.possible_agents}
        self.weights: Dict[str, np.ndarray] = {}
        for agent in env.possible_agents:
            if agent not in weights:
                raise UnknownAgent(f"no weight vector for agent {agent!r}")
            w = np.asarray(weights[agent], dtype=np.float64).reshape(-1)
            if w.size != env.num_objectives:
                raise WeightLengthMismatch(f"weights of length {w.size} for {env.num_objectives} objectives")
            self.weights[agent] = w
        self.num_objectives = 1

    def _reward(self, agent, r):
        return np.array([float(self.weights[agent] @ r)])


class CentraliseAgent(ParallelEnv):
    """A single ``central`` agent controlling every wrapped agent.

    Observations are tuples of per-agent observations; the joint action is
    one ``Discrete`` of size ``prod(n_i)`` (mixed radix, agent 0 the most
    significant digit) when all action spaces are discrete, otherwise the
    concatenation of the ``Box`` spaces. The reward is the component-wise
    sum or mean of the per-agent vectors, so ``num_objectives`` is unchanged.
    """

    def __init__(self, env: ParallelEnv, mode: str = "sum"):
        mode = mode.lower()
        if mode not in ("sum", "mean"):
            raise ValueError(f"mode must be 'sum' or 'mean', got {mode!r}")
        self.env = env
        self.mode = mode
        self.num_objectives = env.num_objectives
        self.team_reward = True
        self.possible_agents = [CENTRAL_AGENT]
        self.metadata = {"name": f"centralised_{env.metadata.get('name', 'env')}"}
        inner = [env.action_space(a) for a in env.possible_agents]
        self._inner_agents = list(env.possible_agents)
        self._obs_space = Tuple_(tuple(env.observation_space(a) for a in env.possible_agents))
        if all(isinstance(s, Discrete) for s in inner):
            self._radices = [s.n for s in inner]
            self._act_space: Space = Discrete(int(np.prod(self._radices)))
        elif all(isinstance(s, Box) for s in inner):
            self._radices = None
            self._box_sizes = [int(np.prod(s.shape)) for s in inner]
            self._box_shapes = [s.shape for s in inner]
            self._act_space = Box(
                np.concatenate([s.low.ravel() for s in inner]),
                np.concatenate([s.high.ravel() for s in inner]),
            )
        else:
            raise TypeError("centralisation needs all-Discrete or all-Box action spaces")

    def observation_space(self, agent):
        return self._obs_space

    def action_space(self, agent):
        return self._act_space

    def encode(self, actions: Sequence[int]) -> int:
        code = 0
        for a, n in zip(actions, self._radices):
            code = code * n + int(a)
        return code

    def decode(self, code: int) -> tuple:
        out = []
        for n in reversed(self._radices):
            code, a = divmod(int(code), n)
            out.append(a)
        return tuple(reversed(out))

    def _split(self, action) -> Dict[str, Any]:
        if self._radices is not None:
            parts = self.decode(action)
        else:
            flat = np.asarray(action, dtype=np.float64)
            parts, start = [], 0
            for size, shape in zip(self._box_sizes, self._box_shapes):
                parts.append(flat[start : start + size].reshape(shape))
                start += size
        return dict(zip(self._inner_agents, parts))

    def reset(self, seed=None, options=None):
        self.agents = [CENTRAL_AGENT]
        self._active = {CENTRAL_AGENT}
        self._terminal = False
        obs, infos = self.env.reset(seed=seed, options=options)
        self._last_obs = dict(obs)
        return {CENTRAL_AGENT: self._joint_obs()}, {CENTRAL_AGENT: {"agents": infos}}

    def _joint_obs(self):
        return tuple(self._last_obs[a] for a in self._inner_agents)

    def _reset(self, options):  # pragma: no cover - reset() is overridden
        raise NotImplementedError

    def _step(self, actions):
        split = self._split(actions[CENTRAL_AGENT])
        out = self.env.step({a: split[a] for a in self.env.agents})
        self._last_obs.update(out.observations)
        rewards = np.array([out.rewards[a] for a in out.rewards], dtype=np.float64)
        r = rewards.sum(axis=0) if self.mode == "sum" else rewards.mean(axis=0)
        done = not self.env.agents
        truncated = done and any(out.truncations.values()) and not all(out.terminations.values())
        return StepOutput(
            {CENTRAL_AGENT: self._joint_obs()},
            {CENTRAL_AGENT: r},
            {CENTRAL_AGENT: done and not truncated},
            {CENTRAL_AGENT: truncated},
            {CENTRAL_AGENT: {"agents": out.infos}},
        )

    def state(self):
        return self.env.state()

    def state_fingerprint(self) -> str:
        return self.env.state_fingerprint()


def centralise(env: ParallelEnv, mode: str = "sum") -> CentraliseAgent:
    return CentraliseAgent(env, mode)
