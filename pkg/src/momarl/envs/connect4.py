"""MO-Connect4.

Terminal reward vector per player:

* win: +1 / -1 / 0 (draw);
* speed: ``1 - moves / (W * H)`` carrying the sign of the win objective;
* optionally, one objective per column ``j``:
  ``(own tokens - opponent tokens in column j) / H``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import FrozenSet, Optional, Tuple

import numpy as np

from momarl.core import Discrete
from momarl.envs.board import BoardGameEnv, board_from_text, board_to_text
from momarl.errors import FileInvalid, FullColumn, GameOver

_DIRECTIONS = ((1, 0), (0, 1), (1, 1), (1, -1))


@dataclass(frozen=True)
class C4State:
    width: int = 7
    height: int = 6
    columns: Tuple[Tuple[int, ...], ...] = ()  # bottom first
    mover: int = 0
    moves: int = 0
    winner: int = -1  # -1 none
    over: bool = False
    column_objectives: bool = False

    def __post_init__(self):
        if not (4 <= self.width <= 20 and 4 <= self.height <= 20):
            raise ValueError(f"board must be between 4x4 and 20x20, got {self.width}x{self.height}")
        if not self.columns:
            object.__setattr__(self, "columns", tuple(() for _ in range(self.width)))

    def cell(self, col: int, row: int) -> int:
        """Owner of (column, row-from-bottom), or -1."""
        if 0 <= col < self.width and 0 <= row < len(self.columns[col]):
            return self.columns[col][row]
        return -1

    def grid(self) -> np.ndarray:
        """Top-row-first int array, -1 for empty cells."""
        g = np.full((self.height, self.width), -1, dtype=np.int64)
        for c, col in enumerate(self.columns):
            for r, v in enumerate(col):
                g[self.height - 1 - r, c] = v
        return g

    def to_text(self) -> str:
        return board_to_text(self.grid())

    @classmethod
    def from_text(cls, text: str, column_objectives: bool = False) -> "C4State":
        g = board_from_text(text)
        h, w = g.shape
        cols = []
        for c in range(w):
            col = [int(v) for v in g[::-1, c]]
            k = col.index(-1) if -1 in col else h
            if any(v != -1 for v in col[k:]) or any(v not in (0, 1) for v in col[:k]):
                raise FileInvalid(f"column {c} is not a valid Connect4 column")
            cols.append(tuple(col[:k]))
        n0 = sum(col.count(0) for col in cols)
        n1 = sum(col.count(1) for col in cols)
        if n0 - n1 not in (0, 1):
            raise FileInvalid("token counts do not alternate")
        return cls(w, h, tuple(cols), mover=(n0 + n1) % 2, moves=n0 + n1, column_objectives=column_objectives)


def c4_num_objectives(width: int, column_objectives: bool) -> int:
    return 2 + (width if column_objectives else 0)


def c4_legal_moves(state: C4State) -> FrozenSet[int]:
    if state.over:
        return frozenset()
    return frozenset(c for c in range(state.width) if len(state.columns[c]) < state.height)


def c4_wins_at(state: C4State, col: int, row: int) -> bool:
    """Whether the token at (col, row) is part of a line of four."""
    who = state.cell(col, row)
    if who < 0:
        return False
    for dc, dr in _DIRECTIONS:
        run = 1
        for sign in (1, -1):
            c, r = col + sign * dc, row + sign * dr
            while state.cell(c, r) == who:
                run += 1
                c, r = c + sign * dc, r + sign * dr
        if run >= 4:
            return True
    return False


def c4_terminal_rewards(state: C4State) -> Tuple[np.ndarray, np.ndarray]:
    d = c4_num_objectives(state.width, state.column_objectives)
    out = [np.zeros(d), np.zeros(d)]
    if state.winner >= 0:
        speed = 1.0 - state.moves / (state.width * state.height)
        for p in (0, 1):
            sign = 1.0 if p == state.winner else -1.0
            out[p][0] = sign
            out[p][1] = sign * speed
    if state.column_objectives:
        for j, col in enumerate(state.columns):
            share = (col.count(0) - col.count(1)) / state.height
            out[0][2 + j] = share
            out[1][2 + j] = -share
    return out[0], out[1]


def c4_step(state: C4State, column: int) -> Tuple[C4State, Optional[Tuple[np.ndarray, np.ndarray]]]:
    """Drop the mover's token; returns the new state and terminal rewards (or None)."""
    if state.over:
        raise GameOver("the game is over")
    if not 0 <= column < state.width:
        raise FullColumn(f"column {column} outside 0..{state.width - 1}")
    if len(state.columns[column]) >= state.height:
        raise FullColumn(f"column {column} is full")
    cols = list(state.columns)
    row = len(cols[column])
    cols[column] = cols[column] + (state.mover,)
    nxt = replace(state, columns=tuple(cols), mover=1 - state.mover, moves=state.moves + 1)
    if c4_wins_at(nxt, column, row):
        nxt = replace(nxt, winner=state.mover, over=True)
    elif nxt.moves == state.width * state.height:
        nxt = replace(nxt, over=True)
    if nxt.over:
        return nxt, c4_terminal_rewards(nxt)
    return nxt, None


class Connect4Env(BoardGameEnv):
    """AEC MO-Connect4. Observations are the board as seen by the observer
    (0 empty, 1 own token, 2 opponent token), top row first."""

    metadata = {"name": "mo_connect4"}

    def __init__(self, width: int = 7, height: int = 6, column_objectives: bool = False):
        super().__init__()
        C4State(width, height)  # validates size
        self.width, self.height = int(width), int(height)
        self.column_objectives = bool(column_objectives)
        self.num_objectives = c4_num_objectives(self.width, self.column_objectives)
        self._act_space = Discrete(self.width)
        self._obs_space = self._obs_box(self.height, self.width, 2)

    def observation_space(self, agent):
        return self._obs_space

    def action_space(self, agent):
        return self._act_space

    def observe(self, agent):
        g = self.game.grid()
        me = self._index[agent]
        out = np.zeros_like(g)
        out[g == me] = 1
        out[g == 1 - me] = 2
        return out

    def action_mask(self):
        mask = np.zeros(self.width, dtype=np.int8)
        mask[list(c4_legal_moves(self.game))] = 1
        return mask

    def _reset(self, options):
        start = (options or {}).get("board")
        self.game = (
            C4State.from_text(start, self.column_objectives) if start
            else C4State(self.width, self.height, column_objectives=self.column_objectives)
        )
        mover = self.possible_agents[self.game.mover]
        self._refresh_masks(mover)
        return mover

    def _apply(self, agent, action):
        self.game, rewards = c4_step(self.game, int(action))
        if self.game.over:
            self._finish(rewards)
            return None
        mover = self.possible_agents[self.game.mover]
        self._refresh_masks(mover)
        return mover
