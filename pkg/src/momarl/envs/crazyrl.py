"""CrazyRL: point-mass drones forming around a target in 3D.

Three variants share the dynamics and the reward: ``surround`` (static
target), ``escort`` (target moves linearly between two points) and
``catch`` (target flees the swarm). Actions are raw displacements in
``[-1, 1]^3`` (times ``speed``) and positions are clipped to the map.

The team reward has two objectives per drone, summed over drones: the
potential-based improvement of the squared distance to the target, and the
mean squared distance to the other drones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from momarl.core import Box, ParallelEnv, StepOutput
from momarl.errors import OutOfBoxAction, SizeMismatch

MODES = ("surround", "escort", "catch")


def crazy_rewards(prev_pos, prev_target, cur_pos) -> np.ndarray:
    """Team reward ``(sum R1_i, sum R2_i)`` for one transition.

    ``prev_pos`` and ``cur_pos`` are ``(n, 3)``; the approach objective
    measures both positions against the *previous* target.
    """
    return per_drone_rewards(prev_pos, prev_target, cur_pos).sum(axis=0)


def per_drone_rewards(prev_pos, prev_target, cur_pos) -> np.ndarray:
    """``(n, 2)`` array of ``(R1_i, R2_i)``."""
    prev_pos = np.asarray(prev_pos, dtype=np.float64)
    cur_pos = np.asarray(cur_pos, dtype=np.float64)
    if prev_pos.shape != cur_pos.shape:
        raise SizeMismatch(f"position arrays differ: {prev_pos.shape} vs {cur_pos.shape}")
    n = cur_pos.shape[0]
    if n < 2:
        raise SizeMismatch("need at least two drones")
    target = np.asarray(prev_target, dtype=np.float64)
    r1 = np.sum((prev_pos - target) ** 2, axis=1) - np.sum((cur_pos - target) ** 2, axis=1)
    diff = cur_pos[:, None, :] - cur_pos[None, :, :]
    r2 = np.sum(diff**2, axis=(1, 2)) / (n - 1)
    return np.stack([r1, r2], axis=1)


@dataclass
class SwarmConfig:
    low: np.ndarray
    high: np.ndarray
    escort_init: np.ndarray
    escort_final: np.ndarray
    escort_steps: int
    escape_speed: float
    threshold: float


def target_update(
    mode: str,
    target: np.ndarray,
    t: int,
    drones: np.ndarray,
    cfg: SwarmConfig,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Target position after step ``t`` (``t`` counts completed steps)."""
    if mode == "surround":
        new = np.array(target, dtype=np.float64)
    elif mode == "escort":
        frac = min(t, cfg.escort_steps) / cfg.escort_steps
        new = cfg.escort_init + frac * (cfg.escort_final - cfg.escort_init)
    elif mode == "catch":
        away = np.asarray(target, dtype=np.float64) - np.mean(drones, axis=0)
        dist = float(np.linalg.norm(away))
        if dist > cfg.threshold:
            direction = away / dist
        else:
            v = rng.normal(size=3)
            direction = v / np.linalg.norm(v)
        new = target + cfg.escape_speed * direction
    else:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    return np.clip(new, cfg.low, cfg.high)


class CrazyRLEnv(ParallelEnv):
    """Parallel CrazyRL with a shared two-objective team reward.

    Each drone observes its own position, the target position and the other
    drones' positions (fully observable).
    """

    team_reward = True
    num_objectives = 2

    def __init__(
        self,
        mode: str = "surround",
        n_drones: int = 4,
        target: Sequence[float] = (0.0, 0.0, 1.0),
        escort_final: Sequence[float] = (3.0, 3.0, 3.0),
        escort_steps: int = 200,
        escape_speed: float = 0.1,
        catch_threshold: float = 0.2,
        collision_radius: float = 0.2,
        contact_radius: float = 0.2,
        bounds: Sequence[Sequence[float]] = ((-5.0, -5.0, 0.0), (5.0, 5.0, 5.0)),
        spawn_radius: float = 2.0,
        spawn_height: float = 1.0,
        speed: float = 1.0,
        horizon: int = 200,
    ):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        if n_drones < 2:
            raise ValueError("need at least two drones")
        self.mode = mode
        self.metadata = {"name": f"mo_crazyrl_{mode}"}
        self.possible_agents = [f"drone_{i}" for i in range(n_drones)]
        self._index = {a: i for i, a in enumerate(self.possible_agents)}
        low, high = (np.asarray(b, dtype=np.float64) for b in bounds)
        self.cfg = SwarmConfig(
            low, high,
            np.asarray(target, dtype=np.float64), np.asarray(escort_final, dtype=np.float64),
            int(escort_steps), float(escape_speed), float(catch_threshold),
        )
        self.collision_radius = float(collision_radius)
        self.contact_radius = float(contact_radius)
        self.spawn_radius = float(spawn_radius)
        self.spawn_height = max(float(spawn_height), 1.0)
        self.speed = float(speed)
        self.horizon = int(horizon)
        self._act_space = Box.uniform(-1.0, 1.0, (3,))
        self._obs_space = Box(np.tile(low, n_drones + 1), np.tile(high, n_drones + 1))

    def observation_space(self, agent):
        return self._obs_space

    def action_space(self, agent):
        return self._act_space

    def reward_bounds(self, agent):
        span = float(np.sum((self.cfg.high - self.cfg.low) ** 2))
        n = len(self.possible_agents)
        return np.array([-n * span, 0.0]), np.array([n * span, n * span])

    def _observations(self):
        obs = {}
        for a in self.agents:
            i = self._index[a]
            others = np.delete(self.pos, i, axis=0).ravel()
            obs[a] = np.concatenate([self.pos[i], self.target, others])
        return obs

    def _spawn(self):
        rng = self.np_random("layout")
        n = len(self.possible_agents)
        phase = rng.uniform(0, 2 * np.pi)
        angles = phase + 2 * np.pi * np.arange(n) / n
        pos = np.stack([
            self.cfg.escort_init[0] + self.spawn_radius * np.cos(angles),
            self.cfg.escort_init[1] + self.spawn_radius * np.sin(angles),
            np.full(n, self.spawn_height),
        ], axis=1)
        return np.clip(pos, self.cfg.low, self.cfg.high)

    def _reset(self, options):
        self.pos = self._spawn()
        self.target = self.cfg.escort_init.copy()
        self.t = 0
        return self._observations(), {a: {} for a in self.agents}

    def step(self, actions):
        for a, act in actions.items():
            if a in getattr(self, "_active", ()) and not self._act_space.contains(act):
                raise OutOfBoxAction(f"action {act!r} of {a!r} outside [-1, 1]^3")
        return super().step(actions)

    def _step(self, actions):
        agents = self.agents
        prev_pos, prev_target = self.pos.copy(), self.target.copy()
        move = np.array([actions[a] for a in self.possible_agents], dtype=np.float64)
        self.pos = np.clip(self.pos + self.speed * move, self.cfg.low, self.cfg.high)
        self.t += 1
        self.target = target_update(self.mode, self.target, self.t, self.pos, self.cfg, self.np_random("transition"))
        reward = crazy_rewards(prev_pos, prev_target, self.pos)
        crashed = self._crashed()
        truncated = self.t >= self.horizon and not crashed
        return StepOutput(
            self._observations(),
            {a: reward.copy() for a in agents},
            {a: crashed for a in agents},
            {a: truncated for a in agents},
            {a: {} for a in agents},
        )

    def _crashed(self) -> bool:
        n = len(self.pos)
        gaps = np.linalg.norm(self.pos[:, None, :] - self.pos[None, :, :], axis=2)
        gaps[np.arange(n), np.arange(n)] = np.inf
        if np.any(gaps < self.collision_radius):
            return True
        if np.any(np.linalg.norm(self.pos - self.target, axis=1) < self.contact_radius):
            return True
        return bool(np.any(self.pos[:, 2] <= self.cfg.low[2]))

    def state(self):
        return (self.pos, self.target, self.t)
