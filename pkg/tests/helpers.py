"""Small environments used as test fixtures."""

import numpy as np

from momarl.core import Discrete, ParallelEnv, StepOutput


class TableBandit(ParallelEnv):
    """One-shot game with a deterministic payoff per joint action."""

    metadata = {"name": "table_bandit"}

    def __init__(self, payoffs, team_reward=True):
        # payoffs[(a0, a1, ...)] -> vector shared by all agents (team) or (n, d)
        self.payoffs = {k: np.asarray(v, dtype=np.float64) for k, v in payoffs.items()}
        first = next(iter(payoffs))
        self.possible_agents = [f"agent_{i}" for i in range(len(first))]
        self.num_objectives = self.payoffs[first].shape[-1]
        self.team_reward = team_reward
        self._n = [max(k[i] for k in payoffs) + 1 for i in range(len(first))]

    def observation_space(self, agent):
        return Discrete(1)

    def action_space(self, agent):
        return Discrete(self._n[self.possible_agents.index(agent)])

    def reward_bounds(self, agent):
        vals = np.stack([v.reshape(-1, self.num_objectives) for v in self.payoffs.values()]).reshape(-1, self.num_objectives)
        return vals.min(axis=0), vals.max(axis=0)

    def joint_actions(self):
        for joint in self.payoffs:
            yield dict(zip(self.possible_agents, joint))

    def _reset(self, options):
        return {a: 0 for a in self.agents}, {a: {} for a in self.agents}

    def _step(self, actions):
        v = self.payoffs[tuple(int(actions[a]) for a in self.possible_agents)]
        rows = np.broadcast_to(v, (len(self.possible_agents), self.num_objectives))
        agents = self.agents
        return StepOutput(
            {a: 0 for a in agents},
            {a: rows[i].copy() for i, a in enumerate(agents)},
            {a: True for a in agents},
            {a: False for a in agents},
            {a: {} for a in agents},
        )


class TwoStateChain(ParallelEnv):
    """Single agent, states 0 and 1, horizon 2, deterministic.

    In state 0 action 1 moves to state 1 (reward 0) and action 0 stays
    (reward 0.2). In state 1 action 0 pays 1 and action 1 pays 0. With
    discount 0.9 the optimal policy is 0 -> 1, 1 -> 0 (value 0.9 > 0.2 + 0.18).
    The observation ``2 * t + state`` includes the step so the task is Markov.
    """

    metadata = {"name": "two_state_chain"}
    possible_agents = ["agent"]
    num_objectives = 1

    def observation_space(self, agent):
        return Discrete(6)

    def action_space(self, agent):
        return Discrete(2)

    def _reset(self, options):
        self.s, self.t = 0, 0
        return {"agent": 0}, {"agent": {}}

    def _step(self, actions):
        a = int(actions["agent"])
        if self.s == 0:
            r, self.s = (0.2, 0) if a == 0 else (0.0, 1)
        else:
            r = 1.0 if a == 0 else 0.0
        self.t += 1
        done = self.t >= 2
        return StepOutput({"agent": 2 * self.t + self.s}, {"agent": np.array([r])}, {"agent": done}, {"agent": False}, {"agent": {}})


class Counter(ParallelEnv):
    """n agents, episode of ``horizon`` steps; reward = (own action, step index)."""

    metadata = {"name": "counter"}
    num_objectives = 2

    def __init__(self, n=3, horizon=4):
        self.possible_agents = [f"agent_{i}" for i in range(n)]
        self.horizon = horizon
        self.steps = 0

    def observation_space(self, agent):
        return Discrete(self.horizon + 1)

    def action_space(self, agent):
        return Discrete(3)

    def _reset(self, options):
        self.t = 0
        return {a: 0 for a in self.agents}, {a: {} for a in self.agents}

    def _step(self, actions):
        self.t += 1
        self.steps += 1
        agents = self.agents
        done = self.t >= self.horizon
        return StepOutput(
            {a: self.t for a in agents},
            {a: np.array([float(actions[a]), float(self.t)]) for a in agents},
            {a: False for a in agents},
            {a: done for a in agents},
            {a: {} for a in agents},
        )


# PASS/FAIL lines of the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list = []
