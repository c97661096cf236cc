"""Vector-reward environment contract.

Two interaction modes are supported:

* :class:`ParallelEnv` -- all active agents act simultaneously and ``step``
  returns five dictionaries keyed by agent id.
* :class:`AECEnv` -- agents act one at a time (agent-environment cycle);
  ``last`` reports the reward accumulated by the current agent since its
  previous turn.

Every reward is a 1-D float array of length ``num_objectives``.
:class:`ParallelToAEC` turns any parallel environment into an AEC one.
"""

from __future__ import annotations

import hashlib
import zlib
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from momarl.errors import (
    ActionGivenForTerminatedAgent,
    MissingAgentAction,
    OutOfSpaceAction,
    SteppedTerminalEnv,
    UnknownAgent,
)

AgentId = str
ObsDict = Dict[AgentId, Any]
InfoDict = Dict[AgentId, Dict[str, Any]]


# ---------------------------------------------------------------------------
# spaces


class Space(ABC):
    @abstractmethod
    def contains(self, x: Any) -> bool:
        ...

    @abstractmethod
    def sample(self, rng: np.random.Generator) -> Any:
        ...

    def __contains__(self, x: Any) -> bool:
        return self.contains(x)


@dataclass(frozen=True)
class Discrete(Space):
    """Integers ``0 .. n-1``."""

    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError(f"Discrete space needs n >= 1, got {self.n}")

    def contains(self, x: Any) -> bool:
        if isinstance(x, (bool, np.bool_)):
            return False
        if isinstance(x, (int, np.integer)):
            return 0 <= x < self.n
        if isinstance(x, np.ndarray) and x.shape == () and np.issubdtype(x.dtype, np.integer):
            return 0 <= int(x) < self.n
        return False

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n))


@dataclass(frozen=True, eq=False)
class Box(Space):
    """Axis-aligned box ``low <= x <= high`` (elementwise)."""

    low: np.ndarray
    high: np.ndarray
    dtype: Any = np.float64

    def __post_init__(self):
        low = np.asarray(self.low, dtype=self.dtype)
        high = np.asarray(self.high, dtype=self.dtype)
        if low.shape != high.shape:
            raise ValueError("Box low/high shapes differ")
        if np.any(low > high):
            raise ValueError("Box requires low <= high elementwise")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @classmethod
    def uniform(cls, low: float, high: float, shape: Tuple[int, ...], dtype=np.float64) -> "Box":
        return cls(np.full(shape, low, dtype=dtype), np.full(shape, high, dtype=dtype), dtype)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.low.shape

    def contains(self, x: Any) -> bool:
        try:
            arr = np.asarray(x, dtype=np.float64)
        except (TypeError, ValueError):
            return False
        if arr.shape != self.shape or not np.all(np.isfinite(arr)):
            return False
        return bool(np.all(arr >= self.low) and np.all(arr <= self.high))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if np.issubdtype(self.dtype, np.integer):
            return rng.integers(self.low, self.high + 1).astype(self.dtype)
        return rng.uniform(self.low, self.high).astype(self.dtype)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Box)
            and np.array_equal(self.low, other.low)
            and np.array_equal(self.high, other.high)
        )

    def __repr__(self) -> str:
        return f"Box(shape={self.shape}, low={self.low.min()}, high={self.high.max()})"


@dataclass(frozen=True)
class Tuple_(Space):
    """Cartesian product of spaces; samples are Python tuples."""

    spaces: Tuple[Space, ...]

    def contains(self, x: Any) -> bool:
        return (
            isinstance(x, tuple)
            and len(x) == len(self.spaces)
            and all(s.contains(v) for s, v in zip(self.spaces, x))
        )

    def sample(self, rng: np.random.Generator) -> tuple:
        return tuple(s.sample(rng) for s in self.spaces)


# ---------------------------------------------------------------------------
# seeding


def derive_rng(seed: int, stream: str) -> np.random.Generator:
    """Independent generator for a named consumer of a master seed.

    The stream name is hashed into the ``spawn_key`` of a ``SeedSequence``,
    so adding a new named consumer never perturbs the existing ones.
    """
    key = zlib.crc32(stream.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(key,))))


class _Seeded:
    _seed: Optional[int] = None

    def _seed_streams(self, seed: Optional[int]) -> None:
        if seed is None:
            seed = int(np.random.SeedSequence().entropy) % (2**63)
        self._seed = int(seed)
        self._streams: Dict[str, np.random.Generator] = {}

    def np_random(self, stream: str) -> np.random.Generator:
        """Per-subsystem random generator (``layout``, ``transition``, ...)."""
        if self._seed is None:
            self._seed_streams(None)
        gen = self._streams.get(stream)
        if gen is None:
            gen = self._streams[stream] = derive_rng(self._seed, stream)
        return gen


def zero_reward(d: int) -> np.ndarray:
    return np.zeros(d, dtype=np.float64)


@dataclass
class StepOutput:
    observations: ObsDict
    rewards: Dict[AgentId, np.ndarray]
    terminations: Dict[AgentId, bool]
    truncations: Dict[AgentId, bool]
    infos: InfoDict = field(default_factory=dict)

    def __iter__(self):
        yield self.observations
        yield self.rewards
        yield self.terminations
        yield self.truncations
        yield self.infos


# ---------------------------------------------------------------------------
# parallel


class ParallelEnv(_Seeded, ABC):
    """Simultaneous-move multi-objective environment.

    Subclasses set ``possible_agents`` and ``num_objectives`` and implement
    ``_reset`` / ``_step``; input validation, agent bookkeeping and seeding
    live here.
    """

    metadata: Dict[str, Any] = {"name": "parallel_env"}
    possible_agents: List[AgentId]
    num_objectives: int
    team_reward: bool = False
    debug: bool = False

    agents: List[AgentId] = []
    _terminal: bool = True

    @abstractmethod
    def observation_space(self, agent: AgentId) -> Space:
        ...

    @abstractmethod
    def action_space(self, agent: AgentId) -> Space:
        ...

    @abstractmethod
    def _reset(self, options: Optional[dict]) -> Tuple[ObsDict, InfoDict]:
        ...

    @abstractmethod
    def _step(self, actions: Dict[AgentId, Any]) -> StepOutput:
        ...

    def reset(self, seed: Optional[int] = None, options: Optional[dict] = None) -> Tuple[ObsDict, InfoDict]:
        if seed is not None or self._seed is None:
            self._seed_streams(seed)
        self.agents = list(self.possible_agents)
        self._active = set(self.agents)
        self._terminal = False
        obs, infos = self._reset(options)
        if self.debug:
            self._check_observations(obs)
        return obs, infos

    def step(self, actions: Dict[AgentId, Any]) -> StepOutput:
        if self._terminal or not self.agents:
            raise SteppedTerminalEnv("step() called on a terminated environment; call reset()")
        for agent in actions:
            if agent not in self._active:
                raise UnknownAgent(f"action given for inactive or unknown agent {agent!r}")
        for agent in self.agents:
            if agent not in actions:
                raise MissingAgentAction(f"no action for active agent {agent!r}")
            if not self.action_space(agent).contains(actions[agent]):
                raise OutOfSpaceAction(f"action {actions[agent]!r} of {agent!r} not in {self.action_space(agent)}")
        out = self._step(actions)
        self.agents = [a for a in self.agents if not (out.terminations[a] or out.truncations[a])]
        self._active = set(self.agents)
        if not self.agents:
            self._terminal = True
        if self.debug:
            self._check_observations(out.observations)
            for agent, r in out.rewards.items():
                assert r.shape == (self.num_objectives,) and np.all(np.isfinite(r)), (agent, r)
        return out

    def _check_observations(self, obs: ObsDict) -> None:
        for agent, o in obs.items():
            if not self.observation_space(agent).contains(o):
                raise AssertionError(f"observation of {agent!r} outside its space: {o!r}")

    def reward_bounds(self, agent: AgentId) -> Tuple[np.ndarray, np.ndarray]:
        """Known per-step reward bounds ``(low, high)``, used for normalisation."""
        raise NotImplementedError(f"{type(self).__name__} declares no reward bounds")

    def state(self) -> Any:
        """Environment state used for fingerprinting."""
        return None

    def state_fingerprint(self) -> str:
        return hashlib.sha256(repr(_canonical(self.state())).encode()).hexdigest()

    @property
    def unwrapped(self) -> "ParallelEnv":
        return self

    def aec(self) -> "ParallelToAEC":
        return ParallelToAEC(self)


def _canonical(x: Any) -> Any:
    if isinstance(x, np.ndarray):
        return ("ndarray", x.dtype.str, x.shape, x.tobytes())
    if isinstance(x, dict):
        return tuple(sorted((k, _canonical(v)) for k, v in x.items()))
    if isinstance(x, (list, tuple)):
        return tuple(_canonical(v) for v in x)
    return x


# ---------------------------------------------------------------------------
# agent-environment cycle


class AECEnv(_Seeded, ABC):
    """Turn-based multi-objective environment.

    Subclasses implement ``_reset``, ``observe`` and ``_apply``. ``_apply``
    writes this transition's rewards into ``self.rewards``, updates
    ``terminations`` / ``truncations`` / ``infos`` and returns the next live
    agent to move. Terminated agents are visited once more and must pass
    ``None``.
    """

    metadata: Dict[str, Any] = {"name": "aec_env"}
    possible_agents: List[AgentId]
    num_objectives: int
    team_reward: bool = False

    agents: List[AgentId] = []
    agent_selection: Optional[AgentId] = None

    @abstractmethod
    def observation_space(self, agent: AgentId) -> Space:
        ...

    @abstractmethod
    def action_space(self, agent: AgentId) -> Space:
        ...

    @abstractmethod
    def observe(self, agent: AgentId) -> Any:
        ...

    @abstractmethod
    def _reset(self, options: Optional[dict]) -> AgentId:
        """Reset internal state and return the first agent to move."""

    @abstractmethod
    def _apply(self, agent: AgentId, action: Any) -> AgentId:
        ...

    def reset(self, seed: Optional[int] = None, options: Optional[dict] = None) -> Tuple[ObsDict, InfoDict]:
        if seed is not None or self._seed is None:
            self._seed_streams(seed)
        self._init_bookkeeping()
        self.agent_selection = self._reset(options)
        return {a: self.observe(a) for a in self.agents}, {a: dict(self.infos[a]) for a in self.agents}

    def _init_bookkeeping(self) -> None:
        self.agents = list(self.possible_agents)
        d = self.num_objectives
        self.rewards = {a: zero_reward(d) for a in self.agents}
        self._cumulative_rewards = {a: zero_reward(d) for a in self.agents}
        self.terminations = {a: False for a in self.agents}
        self.truncations = {a: False for a in self.agents}
        self.infos = {a: {} for a in self.agents}

    def _done(self, agent: AgentId) -> bool:
        return self.terminations[agent] or self.truncations[agent]

    def last(self, observe: bool = True) -> Tuple[Any, np.ndarray, bool, bool, Dict[str, Any]]:
        agent = self.agent_selection
        if agent is None:
            raise SteppedTerminalEnv("no agent to select; call reset()")
        obs = self.observe(agent) if observe else None
        return (
            obs,
            self._cumulative_rewards[agent].copy(),
            self.terminations[agent],
            self.truncations[agent],
            self.infos[agent],
        )

    def agent_iter(self, max_iter: int = 2**63) -> Iterator[AgentId]:
        for _ in range(max_iter):
            if not self.agents:
                return
            yield self.agent_selection

    def step(self, action: Any) -> None:
        if not self.agents:
            raise SteppedTerminalEnv("step() called with no agents left; call reset()")
        agent = self.agent_selection
        if self._done(agent):
            if action is not None:
                raise ActionGivenForTerminatedAgent(f"{agent!r} is done; its action must be None")
            self._dead_step(agent)
            return
        if action is None:
            raise MissingAgentAction(f"live agent {agent!r} must act")
        if not self.action_space(agent).contains(action):
            raise OutOfSpaceAction(f"action {action!r} of {agent!r} not in {self.action_space(agent)}")
        # one shared read-only zero keeps large populations cheap
        zero = zero_reward(self.num_objectives)
        zero.flags.writeable = False
        self._cumulative_rewards[agent] = zero_reward(self.num_objectives)
        self.rewards = dict.fromkeys(self.agents, zero)
        nxt = self._apply(agent, action)
        for a, r in self.rewards.items():
            if r is not zero:
                self._cumulative_rewards[a] = self._cumulative_rewards[a] + r
        self._select(nxt)

    def _select(self, nxt: Optional[AgentId]) -> None:
        dead = [a for a in self.agents if self._done(a)]
        self.agent_selection = dead[0] if dead else nxt

    def _dead_step(self, agent: AgentId) -> None:
        self.agents.remove(agent)
        nxt = self._next_after_dead(agent)
        if self.agents:
            self._select(nxt)
        else:
            self.agent_selection = None

    def _next_after_dead(self, agent: AgentId) -> Optional[AgentId]:
        live = [a for a in self.agents if not self._done(a)]
        return live[0] if live else None

    @property
    def unwrapped(self) -> "AECEnv":
        return self


class ParallelToAEC(AECEnv):
    """Buffering adapter: one full AEC cycle equals one parallel step.

    Actions are collected one agent per turn; the wrapped environment steps
    only once every active agent has acted. Rewards of that step are credited
    to all agents and summed into each agent's cumulative reward.
    """

    def __init__(self, env: ParallelEnv):
        self.env = env
        self.possible_agents = list(env.possible_agents)
        self.num_objectives = env.num_objectives
        self.team_reward = env.team_reward
        self.metadata = dict(env.metadata)

    def observation_space(self, agent):
        return self.env.observation_space(agent)

    def action_space(self, agent):
        return self.env.action_space(agent)

    def observe(self, agent):
        return self._obs[agent]

    def _reset(self, options):
        raise NotImplementedError  # reset() is overridden

    def reset(self, seed=None, options=None):
        # randomness belongs to the wrapped env
        self._init_bookkeeping()
        obs, infos = self.env.reset(seed=seed, options=options)
        self._obs = dict(obs)
        self.infos = {a: dict(infos.get(a, {})) for a in self.agents}
        self._buffer: Dict[AgentId, Any] = {}
        self.last_step_output: Optional[StepOutput] = None
        self.agent_selection = self.agents[0]
        return dict(self._obs), {a: dict(self.infos[a]) for a in self.agents}

    def _apply(self, agent, action):
        self._buffer[agent] = action
        live = [a for a in self.agents if not self._done(a)]
        if len(self._buffer) < len(live):
            return live[live.index(agent) + 1]
        out = self.env.step(self._buffer)
        self._buffer = {}
        self.last_step_output = out
        for a in out.observations:
            self._obs[a] = out.observations[a]
        for a in out.rewards:
            self.rewards[a] = out.rewards[a]
            self.terminations[a] = bool(out.terminations[a])
            self.truncations[a] = bool(out.truncations[a])
            self.infos[a] = out.infos.get(a, {})
        live = [a for a in self.agents if not self._done(a)]
        return live[0] if live else None

    def _next_after_dead(self, agent):
        live = [a for a in self.agents if not self._done(a)]
        if not live:
            return None
        # resume with the earliest live agent that has not acted this cycle
        for a in live:
            if a not in self._buffer:
                return a
        return live[0]

    def state_fingerprint(self) -> str:
        return self.env.state_fingerprint()

    @property
    def unwrapped(self):
        return self.env.unwrapped


def wrap_parallel_as_aec(env: ParallelEnv) -> ParallelToAEC:
    return ParallelToAEC(env)
