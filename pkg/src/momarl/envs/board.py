"""Shared pieces of the turn-based board games.

Board positions serialise to plain text: one row per line, top row first,
``.`` for an empty cell and a digit (player or colour) otherwise.
"""

from __future__ import annotations

import hashlib
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from momarl.core import AECEnv, Box
from momarl.errors import FileInvalid, GameOver


def board_from_text(text: str) -> np.ndarray:
    """Parse a text board into an int array (row 0 = top, -1 = empty)."""
    rows = [line.strip() for line in text.strip().splitlines() if line.strip()]
    if not rows or len({len(r) for r in rows}) != 1:
        raise FileInvalid("board text must be a non-empty rectangle")
    grid = np.full((len(rows), len(rows[0])), -1, dtype=np.int64)
    for r, line in enumerate(rows):
        for c, ch in enumerate(line):
            if ch.isdigit():
                grid[r, c] = int(ch)
            elif ch != ".":
                raise FileInvalid(f"unexpected board character {ch!r} at row {r}, column {c}")
    return grid


def board_to_text(grid: np.ndarray) -> str:
    return "\n".join("".join("." if v < 0 else str(int(v)) for v in row) for row in grid) + "\n"


class BoardGameEnv(AECEnv):
    """AEC base for the board games.

    Subclasses keep an immutable game state in ``self.game`` and map it to
    observations, legal-action masks and terminal reward vectors.
    """

    n_players = 2

    def __init__(self):
        self.possible_agents = [f"player_{i}" for i in range(self.n_players)]
        self._index = {a: i for i, a in enumerate(self.possible_agents)}

    def step(self, action: Any) -> None:
        if not self.agents:
            raise GameOver("the game is over; call reset()")
        super().step(action)

    def _obs_box(self, h: int, w: int, top: int) -> Box:
        return Box(np.zeros((h, w), dtype=np.int64), np.full((h, w), top, dtype=np.int64), dtype=np.int64)

    def _finish(self, rewards: Optional[Sequence[np.ndarray]]) -> None:
        """Mark every agent terminated and write terminal rewards."""
        if rewards is not None:
            for a in self.agents:
                self.rewards[a] = np.asarray(rewards[self._index[a]], dtype=np.float64)
        for a in self.agents:
            self.terminations[a] = True
        self._refresh_masks(None)

    def _refresh_masks(self, mover: Optional[str]) -> None:
        for a in self.agents:
            mask = self.action_mask() if a == mover else np.zeros(self.action_space(a).n, dtype=np.int8)
            self.infos[a] = {"action_mask": mask}

    def action_mask(self) -> np.ndarray:
        raise NotImplementedError

    def legal_actions(self) -> List[int]:
        return [int(i) for i in np.flatnonzero(self.action_mask())]

    def state(self) -> Any:
        return self.game

    def state_fingerprint(self) -> str:
        return hashlib.sha256(repr(self.game).encode()).hexdigest()
