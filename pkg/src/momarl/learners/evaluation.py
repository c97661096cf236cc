"""Policy evaluation and the exhaustive Pareto-front oracle."""

from __future__ import annotations

import copy
from itertools import product
from typing import Any, Callable, Dict, List, Mapping, Optional, Union

import numpy as np

from momarl.concepts import pareto_filter
from momarl.core import ParallelEnv, derive_rng
from momarl.errors import SpaceTooLarge

MAX_CANDIDATES = 10**7

Policy = Union[Callable[[str, Any], Any], Any]


class RandomPolicy:
    """Uniformly random actions from a seeded stream."""

    def __init__(self, env: ParallelEnv, seed: int = 0):
        self.env = env
        self.rng = derive_rng(seed, "random_policy")

    def act(self, agent: str, observation: Any):
        return self.env.action_space(agent).sample(self.rng)

    __call__ = act


def _act(policy: Policy, agent: str, obs: Any):
    return policy.act(agent, obs) if hasattr(policy, "act") else policy(agent, obs)


def _team_vector(rewards: Mapping[str, np.ndarray]) -> np.ndarray:
    # identical vectors under team reward; the agent mean otherwise
    return np.mean(np.stack(list(rewards.values())), axis=0)


def _has_expectation(env: ParallelEnv) -> bool:
    return hasattr(env.unwrapped, "expected_reward")


def evaluate_policy(
    env: ParallelEnv,
    policy: Policy,
    episodes: int = 1,
    seed: int = 0,
    exact: bool = False,
) -> np.ndarray:
    """Mean undiscounted episodic return vector of ``policy``.

    Per-step reward vectors are averaged over agents (for team-reward
    environments this is the shared vector). With ``exact=True`` on a
    single-step environment exposing ``expected_reward`` (gem mining), the
    analytic expectation of the chosen joint action replaces sampling.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if exact and not _has_expectation(env):
        raise ValueError(f"{type(env.unwrapped).__name__} has no analytic expectation")
    total = np.zeros(env.num_objectives)
    for ep in range(episodes):
        obs, _ = env.reset(seed=int(seed) + ep)
        if exact:
            joint = {a: _act(policy, a, obs[a]) for a in env.agents}
            total += env.unwrapped.expected_reward(joint)
            continue
        ret = np.zeros(env.num_objectives)
        while env.agents:
            out = env.step({a: _act(policy, a, obs[a]) for a in env.agents})
            ret += _team_vector(out.rewards)
            obs = out.observations
        total += ret
    return total / episodes


def episode_returns(env: ParallelEnv, policy: Policy, episodes: int, seed: int = 0) -> np.ndarray:
    """``(episodes, d)`` array of agent-averaged episodic returns."""
    rows = []
    for ep in range(episodes):
        rows.append(evaluate_policy(env, policy, 1, seed + ep))
    return np.stack(rows)


def _joint_spaces(env: ParallelEnv) -> List[List[int]]:
    return [list(range(env.action_space(a).n)) for a in env.possible_agents]


def _check_size(n: float) -> None:
    if n > MAX_CANDIDATES:
        raise SpaceTooLarge(f"{n:.3g} candidate policies exceed the {MAX_CANDIDATES:.0e} limit")


def brute_force_pf(env: ParallelEnv, horizon: Optional[int] = None, seed: int = 0) -> List[np.ndarray]:
    """Exact Pareto front by exhaustive enumeration.

    Stateless environments (those exposing ``joint_actions``) enumerate every
    joint arm, using ``expected_reward`` when available. Others enumerate
    every open-loop joint action sequence of length ``horizon``; the
    environment must be deterministic given ``seed``. Vectors are episodic
    returns averaged over agents.
    """
    base = env.unwrapped
    arms = [env.action_space(a).n for a in env.possible_agents]
    if hasattr(base, "joint_actions") and horizon in (None, 1):
        _check_size(float(np.prod(arms, dtype=float)))
        values = []
        for joint in base.joint_actions():
            if _has_expectation(env):
                values.append(base.expected_reward(joint))
            else:
                env.reset(seed=seed)
                values.append(_team_vector(env.step(joint).rewards))
        return pareto_filter(values)
    if horizon is None:
        horizon = getattr(base, "horizon", None)
        if horizon is None:
            raise ValueError("horizon required for stateful environments without a horizon attribute")
    per_step = float(np.prod(arms, dtype=float))
    _check_size(per_step**horizon)
    env.reset(seed=seed)
    joints = [dict(zip(env.possible_agents, c)) for c in product(*_joint_spaces(env))]
    values: List[np.ndarray] = []

    def expand(node: ParallelEnv, ret: np.ndarray, depth: int) -> None:
        if depth == horizon or not node.agents:
            values.append(ret)
            return
        for joint in joints:
            child = copy.deepcopy(node)
            out = child.step({a: joint[a] for a in child.agents})
            expand(child, ret + _team_vector(out.rewards), depth + 1)

    expand(env, np.zeros(env.num_objectives), 0)
    return pareto_filter(values)
