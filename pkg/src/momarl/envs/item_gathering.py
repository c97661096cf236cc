"""MO-ItemGathering: agents collect coloured items on a grid.

Each colour is one objective. Entering a cell holding an item of colour
``o`` removes it and yields +1 on component ``o``, for the collector only
(individual mode) or for every agent (team mode). Several agents may share
a cell; when more than one enters an item cell at once, the lowest-index
agent collects.
"""

from __future__ import annotations

from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from momarl.core import Box, Discrete, ParallelEnv, StepOutput

UP, DOWN, LEFT, RIGHT, STAY = range(5)
_MOVES = np.array([(-1, 0), (1, 0), (0, -1), (0, 1), (0, 0)], dtype=np.int64)

Cell = Tuple[int, int]


def parse_item_layout(text: str) -> Tuple[Dict[Cell, int], Tuple[int, int]]:
    """Read a layout drawn with ``.`` for empty cells and digits for colours.

    Returns ``({(row, col): colour}, (height, width))``.
    """
    rows = [line.strip() for line in text.strip().splitlines() if line.strip()]
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError("layout must be a non-empty rectangle")
    items = {}
    for r, line in enumerate(rows):
        for c, ch in enumerate(line):
            if ch.isdigit():
                items[(r, c)] = int(ch)
            elif ch != ".":
                raise ValueError(f"unexpected layout character {ch!r}")
    return items, (len(rows), len(rows[0]))


class ItemGatheringEnv(ParallelEnv):
    """Parallel MO-ItemGathering.

    With no explicit ``item_layout`` (a ``{(row, col): colour}`` mapping),
    ``items_per_colour`` items of each colour and the agent start cells are
    placed at reset from the ``layout`` random stream. Observations are
    integer vectors: the flattened grid (0 empty, ``1 + colour`` otherwise),
    every agent's ``(row, col)``, then the observer's own index.
    """

    metadata = {"name": "mo_item_gathering"}

    def __init__(
        self,
        height: int = 8,
        width: int = 8,
        n_agents: int = 2,
        n_colours: int = 3,
        horizon: int = 50,
        reward_mode: str = "individual",
        items_per_colour: int = 3,
        item_layout: Optional[Dict[Cell, int]] = None,
        agent_positions: Optional[Sequence[Cell]] = None,
    ):
        if reward_mode not in ("individual", "team"):
            raise ValueError(f"reward_mode must be 'individual' or 'team', got {reward_mode!r}")
        if n_colours < 2:
            raise ValueError("need at least 2 item colours")
        if height < 1 or width < 1 or n_agents < 1 or horizon < 1:
            raise ValueError("grid size, n_agents and horizon must be >= 1")
        self.height, self.width = int(height), int(width)
        self.n_colours = int(n_colours)
        self.horizon = int(horizon)
        self.reward_mode = reward_mode
        self.team_reward = reward_mode == "team"
        self.num_objectives = self.n_colours
        self.items_per_colour = int(items_per_colour)
        self.possible_agents = [f"agent_{i}" for i in range(n_agents)]
        self._index = {a: i for i, a in enumerate(self.possible_agents)}
        if item_layout is not None:
            for (r, c), colour in item_layout.items():
                if not (0 <= r < self.height and 0 <= c < self.width and 0 <= colour < self.n_colours):
                    raise ValueError(f"item {colour} at {(r, c)} outside grid or colour range")
            self.item_layout = dict(item_layout)
        else:
            self.item_layout = None
            if self.n_colours * self.items_per_colour > self.height * self.width:
                raise ValueError("more items than grid cells")
        if agent_positions is not None:
            agent_positions = [tuple(int(v) for v in p) for p in agent_positions]
            if len(agent_positions) != n_agents:
                raise ValueError(f"{len(agent_positions)} start cells for {n_agents} agents")
            if any(not (0 <= r < self.height and 0 <= c < self.width) for r, c in agent_positions):
                raise ValueError("agent start cell outside grid")
        self.agent_positions = agent_positions
        n_cells = self.height * self.width
        low = np.zeros(n_cells + 2 * n_agents + 1, dtype=np.int64)
        high = np.concatenate([
            np.full(n_cells, self.n_colours),
            np.tile([self.height - 1, self.width - 1], n_agents),
            [n_agents - 1],
        ]).astype(np.int64)
        self._obs_space = Box(low, high, dtype=np.int64)
        self._act_space = Discrete(5)

    @classmethod
    def from_text(cls, layout: str, agent_positions: Sequence[Cell], n_colours: Optional[int] = None, **kw):
        items, (h, w) = parse_item_layout(layout)
        n_colours = n_colours or max(2, max(items.values(), default=0) + 1)
        return cls(height=h, width=w, n_agents=len(agent_positions), n_colours=n_colours,
                   item_layout=items, agent_positions=agent_positions, **kw)

    def observation_space(self, agent):
        return self._obs_space

    def action_space(self, agent):
        return self._act_space

    def reward_bounds(self, agent):
        d = self.num_objectives
        high = len(self.possible_agents) if self.team_reward else 1
        return np.zeros(d), np.full(d, float(high))

    def _place(self):
        rng = self.np_random("layout")
        n_cells = self.height * self.width
        grid = np.full(n_cells, -1, dtype=np.int64)
        if self.item_layout is None:
            cells = rng.choice(n_cells, size=self.n_colours * self.items_per_colour, replace=False)
            grid[cells] = np.repeat(np.arange(self.n_colours), self.items_per_colour)
        else:
            for (r, c), colour in self.item_layout.items():
                grid[r * self.width + c] = colour
        if self.agent_positions is None:
            flat = rng.integers(n_cells, size=len(self.possible_agents))
            pos = np.stack([flat // self.width, flat % self.width], axis=1)
        else:
            pos = np.array(self.agent_positions, dtype=np.int64)
        return grid.reshape(self.height, self.width), pos

    def _observations(self):
        shared = np.concatenate([(self.grid + 1).ravel(), self.pos.ravel()])
        return {a: np.append(shared, self._index[a]) for a in self.agents}

    def _reset(self, options):
        self.grid, self.pos = self._place()
        self.initial_items = int((self.grid >= 0).sum())
        self.t = 0
        return self._observations(), {a: {} for a in self.agents}

    def _step(self, actions):
        agents = self.agents
        d = self.num_objectives
        moves = _MOVES[[actions[a] for a in agents]]
        idx = [self._index[a] for a in agents]
        self.pos[idx] = np.clip(self.pos[idx] + moves, 0, [self.height - 1, self.width - 1])
        rewards = {a: np.zeros(d) for a in agents}
        collected = np.zeros(d)
        for a in agents:  # agent order is index order, so the lowest index collects
            r, c = self.pos[self._index[a]]
            colour = self.grid[r, c]
            if colour >= 0:
                self.grid[r, c] = -1
                rewards[a][colour] += 1.0
                collected[colour] += 1.0
        if self.team_reward:
            rewards = {a: collected.copy() for a in agents}
        self.t += 1
        empty = not np.any(self.grid >= 0)
        out_of_time = self.t >= self.horizon
        return StepOutput(
            self._observations(),
            rewards,
            {a: empty for a in agents},
            {a: out_of_time and not empty for a in agents},
            {a: {} for a in agents},
        )

    def state(self):
        return (self.grid, self.pos, self.t)


# 3x3 fixture used by tests and the acceptance suite: each agent sits two
# steps away from both items
FIXTURE_3X3 = """
..0
...
1..
"""
FIXTURE_3X3_AGENTS = ((0, 0), (2, 2))


def item_gathering_fixture(horizon: int = 3, reward_mode: str = "team") -> ItemGatheringEnv:
    return ItemGatheringEnv.from_text(FIXTURE_3X3, FIXTURE_3X3_AGENTS, horizon=horizon, reward_mode=reward_mode)
