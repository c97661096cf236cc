"""MO-Breakthrough.

Each player starts with two full rows of pieces. A piece moves one square
forward or diagonally forward onto an empty square, and captures only
diagonally. Reaching the opponent's home row, or capturing every opponent
piece, wins. A player left without a legal move loses.

Terminal reward vector per player (the first ``n_objectives`` of):
win (+1 / -1), speed ``1 - moves / move_cap`` signed like the win
objective, captures ``taken / (2 W)`` and preservation ``-lost / (2 W)``.
Reaching the move cap is a draw and scores zero on every objective.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import FrozenSet, Optional, Tuple

import numpy as np

from momarl.core import Discrete
from momarl.envs.board import BoardGameEnv, board_from_text, board_to_text
from momarl.errors import FileInvalid, GameOver, IllegalMove

Move = Tuple[int, int, int, int]  # from_row, from_col, to_row, to_col
EMPTY = -1


@dataclass(frozen=True)
class BtState:
    width: int = 8
    height: int = 8
    board: Tuple[Tuple[int, ...], ...] = ()  # row 0 is player 0's home row
    mover: int = 0
    moves: int = 0
    captures: Tuple[int, int] = (0, 0)  # pieces taken by each player
    winner: int = -1
    over: bool = False
    move_cap: int = 0

    def __post_init__(self):
        if not (3 <= self.width <= 20 and 5 <= self.height <= 20):
            raise ValueError(f"board must be 3..20 wide and 5..20 high, got {self.width}x{self.height}")
        if not self.board:
            w, h = self.width, self.height
            rows = [(0,) * w] * 2 + [(EMPTY,) * w] * (h - 4) + [(1,) * w] * 2
            object.__setattr__(self, "board", tuple(rows))
        if not self.move_cap:
            object.__setattr__(self, "move_cap", 4 * self.width * self.height)

    def pieces(self, player: int) -> int:
        return sum(row.count(player) for row in self.board)

    def grid(self) -> np.ndarray:
        """Top-row-first array (player 1's home row first)."""
        return np.array(self.board[::-1], dtype=np.int64)

    def to_text(self) -> str:
        return board_to_text(self.grid())

    @classmethod
    def from_text(cls, text: str, mover: int = 0) -> "BtState":
        g = board_from_text(text)
        if np.any((g != EMPTY) & (g != 0) & (g != 1)):
            raise FileInvalid("breakthrough boards hold only players 0 and 1")
        h, w = g.shape
        board = tuple(tuple(int(v) for v in row) for row in g[::-1])
        return cls(w, h, board, mover=mover)


def _forward(player: int) -> int:
    return 1 if player == 0 else -1


def bt_legal_moves(state: BtState) -> FrozenSet[Move]:
    if state.over:
        return frozenset()
    p, f = state.mover, _forward(state.mover)
    w, h, b = state.width, state.height, state.board
    out = set()
    for r in range(h):
        tr = r + f
        if not 0 <= tr < h:
            continue
        row, nxt = b[r], b[tr]
        for c in range(w):
            if row[c] != p:
                continue
            if nxt[c] == EMPTY:
                out.add((r, c, tr, c))
            for tc in (c - 1, c + 1):
                if 0 <= tc < w and nxt[tc] != p:
                    out.add((r, c, tr, tc))
    return frozenset(out)


def bt_terminal_rewards(state: BtState, n_objectives: int = 4) -> Tuple[np.ndarray, np.ndarray]:
    out = [np.zeros(n_objectives), np.zeros(n_objectives)]
    if state.winner < 0:
        return out[0], out[1]
    speed = 1.0 - state.moves / state.move_cap
    full = 2 * state.width
    for p in (0, 1):
        sign = 1.0 if p == state.winner else -1.0
        vec = [sign, sign * speed, state.captures[p] / full, -state.captures[1 - p] / full]
        out[p][:] = vec[:n_objectives]
    return out[0], out[1]


def bt_step(state: BtState, move: Move, n_objectives: int = 4) -> Tuple[BtState, Optional[Tuple[np.ndarray, np.ndarray]]]:
    if state.over:
        raise GameOver("the game is over")
    move = tuple(int(v) for v in move)
    if move not in bt_legal_moves(state):
        raise IllegalMove(f"{move} is not a legal move for player {state.mover}")
    fr, fc, tr, tc = move
    p = state.mover
    rows = [list(r) for r in state.board]
    took = rows[tr][tc] == 1 - p
    rows[fr][fc] = EMPTY
    rows[tr][tc] = p
    caps = list(state.captures)
    caps[p] += int(took)
    nxt = replace(state, board=tuple(tuple(r) for r in rows), mover=1 - p, moves=state.moves + 1, captures=tuple(caps))
    goal = state.height - 1 if p == 0 else 0
    if tr == goal or nxt.pieces(1 - p) == 0:
        nxt = replace(nxt, winner=p, over=True)
    elif not bt_legal_moves(nxt):
        nxt = replace(nxt, winner=p, over=True)
    elif nxt.moves >= nxt.move_cap:
        nxt = replace(nxt, over=True)
    if nxt.over:
        return nxt, bt_terminal_rewards(nxt, n_objectives)
    return nxt, None


def bt_perft(state: BtState, depth: int) -> int:
    """Number of move sequences of length ``depth`` (game-over positions stop)."""
    if depth == 0:
        return 1
    moves = bt_legal_moves(state)
    if depth == 1:
        return len(moves)
    return sum(bt_perft(bt_step(state, m)[0], depth - 1) for m in moves)


def encode_move(width: int, move: Move) -> int:
    fr, fc, _, tc = move
    return (fr * width + fc) * 3 + (tc - fc + 1)


def decode_move(width: int, player: int, action: int) -> Move:
    cell, k = divmod(int(action), 3)
    fr, fc = divmod(cell, width)
    return fr, fc, fr + _forward(player), fc + k - 1


class BreakthroughEnv(BoardGameEnv):
    """AEC MO-Breakthrough.

    Action ``(row * W + col) * 3 + k`` moves the piece at (row, col) with
    ``k`` in {0: diagonal toward column - 1, 1: straight, 2: diagonal toward
    column + 1}. Observations: 0 empty, 1 own piece, 2 opponent piece, top
    row first.
    """

    metadata = {"name": "mo_breakthrough"}

    def __init__(self, width: int = 8, height: int = 8, n_objectives: int = 4, move_cap: Optional[int] = None):
        super().__init__()
        if not 1 <= n_objectives <= 4:
            raise ValueError(f"n_objectives must be 1..4, got {n_objectives}")
        BtState(width, height)
        self.width, self.height = int(width), int(height)
        self.move_cap = int(move_cap) if move_cap else 4 * self.width * self.height
        self.num_objectives = int(n_objectives)
        self._act_space = Discrete(self.width * self.height * 3)
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
        mask = np.zeros(self._act_space.n, dtype=np.int8)
        for m in bt_legal_moves(self.game):
            mask[encode_move(self.width, m)] = 1
        return mask

    def _reset(self, options):
        start = (options or {}).get("board")
        if start:
            self.game = replace(BtState.from_text(start, (options or {}).get("mover", 0)), move_cap=self.move_cap)
        else:
            self.game = BtState(self.width, self.height, move_cap=self.move_cap)
        mover = self.possible_agents[self.game.mover]
        self._refresh_masks(mover)
        return mover

    def _apply(self, agent, action):
        move = decode_move(self.width, self.game.mover, action)
        self.game, rewards = bt_step(self.game, move, self.num_objectives)
        if self.game.over:
            self._finish(rewards)
            return None
        mover = self.possible_agents[self.game.mover]
        self._refresh_masks(mover)
        return mover
