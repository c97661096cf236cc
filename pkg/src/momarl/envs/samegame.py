"""MO-SameGame.

Agents take turns removing a connected (4-neighbour) group of at least two
same-coloured tiles, scoring ``n**2`` for a group of ``n`` tiles. Tiles
above a removed group fall down and empty columns are closed up from the
right. The game ends when no removable group remains.

With ``per_colour`` objectives the score is credited to the objective of
the removed colour, otherwise to a single objective. In individual mode
only the mover is credited, in team mode every agent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Optional, Tuple

import numpy as np
from scipy import ndimage

from momarl.core import Discrete
from momarl.envs.board import BoardGameEnv, board_from_text, board_to_text
from momarl.errors import FileInvalid, GameOver, GroupTooSmall

EMPTY = -1
Cell = Tuple[int, int]  # (row from bottom, column)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.int64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SgState:
    """``tiles`` is ``(height, width)`` with row 0 at the bottom."""

    tiles: np.ndarray
    n_colours: int
    n_agents: int = 1
    mover: int = 0
    scores: np.ndarray = field(default=None)  # agents x colours
    moves: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tiles", _frozen(self.tiles))
        if self.scores is None:
            object.__setattr__(self, "scores", _frozen(np.zeros((self.n_agents, self.n_colours))))
        else:
            object.__setattr__(self, "scores", _frozen(self.scores))

    @property
    def height(self) -> int:
        return self.tiles.shape[0]

    @property
    def width(self) -> int:
        return self.tiles.shape[1]

    @property
    def over(self) -> bool:
        return not sg_legal_moves(self)

    def grid(self) -> np.ndarray:
        return self.tiles[::-1].copy()

    def to_text(self) -> str:
        return board_to_text(self.grid())

    def __repr__(self) -> str:
        return f"SgState(tiles={self.tiles.tolist()}, mover={self.mover}, scores={self.scores.tolist()})"

    @classmethod
    def from_text(cls, text: str, n_colours: Optional[int] = None, n_agents: int = 1) -> "SgState":
        g = board_from_text(text)
        tiles = g[::-1]
        if not sg_is_settled(tiles):
            raise FileInvalid("board has floating tiles or gaps between columns")
        if n_colours is None:
            n_colours = max(2, int(tiles.max()) + 1)
        elif tiles.max() >= n_colours:
            raise FileInvalid(f"colour {int(tiles.max())} outside 0..{n_colours - 1}")
        return cls(tiles, n_colours, n_agents)


def sg_random_board(rng: np.random.Generator, height: int, width: int, n_colours: int) -> np.ndarray:
    return rng.integers(n_colours, size=(height, width))


def sg_is_settled(tiles: np.ndarray) -> bool:
    """Gravity (no floating tile) and compaction (no gap left of a column)."""
    filled = tiles != EMPTY
    # within a column, once empty always empty going up
    if np.any(filled[1:] & ~filled[:-1]):
        return False
    used = filled[0]
    return not np.any(used[1:] & ~used[:-1])


def _labels(tiles: np.ndarray):
    """Group label per cell (0 = empty) and the size of each label."""
    labels = np.zeros(tiles.shape, dtype=np.int64)
    offset = 0
    for colour in np.unique(tiles[tiles != EMPTY]):
        lab, k = ndimage.label(tiles == colour)
        labels[lab > 0] = lab[lab > 0] + offset
        offset += k
    sizes = np.bincount(labels.ravel(), minlength=offset + 1)
    sizes[0] = 0
    return labels, sizes


def sg_groups(state: SgState) -> Dict[Cell, FrozenSet[Cell]]:
    """Removable groups keyed by their representative (lowest row, then column)."""
    labels, sizes = _labels(state.tiles)
    out = {}
    for lab in np.flatnonzero(sizes >= 2):
        rows, cols = np.nonzero(labels == lab)
        cells = frozenset(zip(rows.tolist(), cols.tolist()))
        out[min(cells)] = cells
    return out


def sg_legal_moves(state: SgState) -> FrozenSet[Cell]:
    labels, sizes = _labels(state.tiles)
    if not np.any(sizes >= 2):
        return frozenset()
    return frozenset(sg_groups(state))


def sg_legal_mask(state: SgState) -> np.ndarray:
    """Flat mask over ``row * width + col``: any cell of a removable group."""
    labels, sizes = _labels(state.tiles)
    return (sizes[labels] >= 2).ravel()


def sg_collapse(tiles: np.ndarray) -> np.ndarray:
    """Apply gravity then close up empty columns."""
    h, w = tiles.shape
    out = np.full((h, w), EMPTY, dtype=np.int64)
    j = 0
    for c in range(w):
        col = tiles[:, c]
        col = col[col != EMPTY]
        if col.size:
            out[: col.size, j] = col
            j += 1
    return out


def sg_step(state: SgState, cell: Cell, team: bool = False, per_colour: bool = True) -> Tuple[SgState, np.ndarray]:
    """Remove the group containing ``cell``; returns the new state and the
    ``(n_agents, d)`` reward matrix of this move."""
    legal = sg_legal_mask(state)
    if not legal.any():
        raise GameOver("no removable group left")
    r, c = int(cell[0]), int(cell[1])
    if not (0 <= r < state.height and 0 <= c < state.width) or not legal[r * state.width + c]:
        raise GroupTooSmall(f"cell {(r, c)} is not part of a group of two or more tiles")
    labels, sizes = _labels(state.tiles)
    group = labels == labels[r, c]
    n = int(sizes[labels[r, c]])
    colour = int(state.tiles[r, c])
    tiles = state.tiles.copy()
    tiles[group] = EMPTY
    tiles = sg_collapse(tiles)
    d = state.n_colours if per_colour else 1
    move_reward = np.zeros(d)
    move_reward[colour if per_colour else 0] = n * n
    rewards = np.zeros((state.n_agents, d))
    if team:
        rewards[:] = move_reward
    else:
        rewards[state.mover] = move_reward
    scores = state.scores.copy()
    scores[slice(None) if team else state.mover, colour] += n * n
    nxt = SgState(tiles, state.n_colours, state.n_agents, (state.mover + 1) % state.n_agents, scores, state.moves + 1)
    return nxt, rewards


class SameGameEnv(BoardGameEnv):
    """AEC MO-SameGame for 1 to 5 agents.

    The action is the flat cell index ``row * width + col`` (row 0 at the
    bottom) of any tile in the group to remove. Observations are the board
    top row first, 0 for empty and ``1 + colour`` otherwise.
    """

    metadata = {"name": "mo_samegame"}

    def __init__(
        self,
        width: int = 15,
        height: int = 15,
        n_colours: int = 5,
        n_agents: int = 1,
        reward_mode: str = "individual",
        per_colour: bool = True,
        board: Optional[str] = None,
    ):
        if not (3 <= width <= 30 and 3 <= height <= 30):
            raise ValueError(f"board must be between 3x3 and 30x30, got {width}x{height}")
        if not 2 <= n_colours <= 10:
            raise ValueError(f"n_colours must be 2..10, got {n_colours}")
        if not 1 <= n_agents <= 5:
            raise ValueError(f"n_agents must be 1..5, got {n_agents}")
        if reward_mode not in ("individual", "team"):
            raise ValueError(f"reward_mode must be 'individual' or 'team', got {reward_mode!r}")
        self.n_players = int(n_agents)
        super().__init__()
        self.width, self.height, self.n_colours = int(width), int(height), int(n_colours)
        self.reward_mode = reward_mode
        self.team_reward = reward_mode == "team"
        self.per_colour = bool(per_colour)
        self.num_objectives = self.n_colours if self.per_colour else 1
        self.board = board
        if board is not None:
            st = SgState.from_text(board, self.n_colours, self.n_players)
            self.height, self.width = st.tiles.shape
        self._act_space = Discrete(self.width * self.height)
        self._obs_space = self._obs_box(self.height, self.width, self.n_colours)

    def observation_space(self, agent):
        return self._obs_space

    def action_space(self, agent):
        return self._act_space

    def observe(self, agent):
        return self.game.grid() + 1

    def action_mask(self):
        return sg_legal_mask(self.game).astype(np.int8)

    def _reset(self, options):
        start = (options or {}).get("board", self.board)
        if start:
            self.game = SgState.from_text(start, self.n_colours, self.n_players)
        else:
            tiles = sg_random_board(self.np_random("layout"), self.height, self.width, self.n_colours)
            self.game = SgState(tiles, self.n_colours, self.n_players)
        if self.game.over:
            self._finish(None)
            return self.possible_agents[0]
        mover = self.possible_agents[self.game.mover]
        self._refresh_masks(mover)
        return mover

    def _apply(self, agent, action):
        cell = divmod(int(action), self.width)
        self.game, rewards = sg_step(self.game, cell, self.team_reward, self.per_colour)
        for a in self.agents:
            self.rewards[a] = rewards[self._index[a]]
        if self.game.over:
            self._finish(None)
            return None
        mover = self.possible_agents[self.game.mover]
        self._refresh_masks(mover)
        return mover
