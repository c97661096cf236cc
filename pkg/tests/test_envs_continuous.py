import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from momarl.envs import CrazyRLEnv, crazy_rewards, target_update
from momarl.envs.crazyrl import SwarmConfig, per_drone_rewards
from momarl.errors import OutOfBoxAction, SizeMismatch

coords = st.floats(-5, 5, allow_nan=False)


def cfg(**kw):
    base = dict(
        low=np.array([-5.0, -5.0, 0.0]), high=np.array([5.0, 5.0, 5.0]),
        escort_init=np.array([0.0, 0.0, 1.0]), escort_final=np.array([3.0, 3.0, 3.0]),
        escort_steps=200, escape_speed=0.1, threshold=0.2,
    )
    base.update(kw)
    return SwarmConfig(**base)


# ------------------------------------------------------------------ rewards


def test_reward_examples():
    pos = np.array([[0.0, 0, 1], [2.0, 0, 1]])
    r = per_drone_rewards(pos, (0, 0, 3), pos)
    np.testing.assert_array_equal(r[:, 0], [0, 0])
    np.testing.assert_array_equal(r[:, 1], [4, 4])
    assert crazy_rewards(pos, (0, 0, 3), pos)[1] == 8.0
    # straight approach by delta from distance r
    prev, cur = np.array([[5.0, 0, 0], [0, 9, 0]]), np.array([[3.5, 0, 0], [0, 9, 0]])
    assert per_drone_rewards(prev, (0, 0, 0), cur)[0, 0] == pytest.approx(5**2 - 3.5**2)
    with pytest.raises(SizeMismatch):
        crazy_rewards(pos, (0, 0, 0), pos[:1])


@given(arrays(np.float64, (201, 3, 3), elements=coords), arrays(np.float64, 3, elements=coords))
def test_approach_reward_telescopes(traj, target):
    total = sum(per_drone_rewards(traj[t], target, traj[t + 1])[:, 0] for t in range(200))
    expected = np.sum((traj[0] - target) ** 2, axis=1) - np.sum((traj[-1] - target) ** 2, axis=1)
    np.testing.assert_allclose(total, expected, atol=1e-9)


@given(arrays(np.float64, (4, 3), elements=coords), st.permutations(range(4)))
def test_spread_nonnegative_and_permutation_invariant(pos, perm):
    r = crazy_rewards(pos, (0, 0, 0), pos)
    assert r[1] >= 0
    assert (r[1] == 0) == bool(np.all(pos == pos[0]))
    prev = np.roll(pos, 1, axis=0)
    np.testing.assert_allclose(crazy_rewards(prev[list(perm)], (1, 1, 1), pos[list(perm)]),
                               crazy_rewards(prev, (1, 1, 1), pos), atol=1e-9)


# ------------------------------------------------------------------- target


def test_surround_static_and_escort_endpoints():
    c = cfg()
    drones = np.zeros((2, 3))
    np.testing.assert_array_equal(target_update("surround", np.array([1.0, 2, 3]), 5, drones, c), [1, 2, 3])
    np.testing.assert_array_equal(target_update("escort", c.escort_init, 0, drones, c), c.escort_init)
    np.testing.assert_array_equal(target_update("escort", c.escort_init, 200, drones, c), c.escort_final)


def test_escort_step_size_constant():
    c = cfg()
    pts = np.stack([target_update("escort", c.escort_init, t, None, c) for t in range(201)])
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    np.testing.assert_allclose(steps, np.linalg.norm(c.escort_final - c.escort_init) / 200)


def test_catch_flees_and_random_step():
    c = cfg()
    target = np.array([0.0, 0.0, 2.0])
    drones = np.array([[-2.0, 0, 2], [-3.0, 0, 2]])
    np.testing.assert_allclose(target_update("catch", target, 1, drones, c), [0.1, 0, 2])
    close = np.array([[0.05, 0, 2], [-0.05, 0, 2]])
    moved = target_update("catch", target, 1, close, c, np.random.default_rng(0))
    assert np.linalg.norm(moved - target) == pytest.approx(0.1)


def test_target_clipped():
    c = cfg()
    out = target_update("catch", np.array([5.0, 0, 2]), 1, np.array([[0.0, 0, 2], [1.0, 0, 2]]), c)
    assert out[0] == 5.0


# ---------------------------------------------------------------------- env


def test_zero_actions_static_target():
    env = CrazyRLEnv(horizon=10)
    env.reset(seed=0)
    pos = env.pos.copy()
    out = env.step({a: np.zeros(3) for a in env.agents})
    np.testing.assert_array_equal(env.pos, pos)
    assert not any(out.terminations.values())
    assert out.rewards["drone_0"][0] == 0.0


def test_push_past_bound_clips():
    env = CrazyRLEnv(spawn_radius=4.5, horizon=10)
    env.reset(seed=0)
    for _ in range(3):
        env.step({a: np.array([1.0, 1.0, 1.0]) for a in env.agents})
    assert np.all(env.pos <= 5.0) and np.any(env.pos == 5.0)


def test_collision_terminates_everyone():
    env = CrazyRLEnv(n_drones=2, spawn_radius=0.5)
    env.reset(seed=0)
    gap = env.pos[1] - env.pos[0]
    out = env.step({"drone_0": np.clip(gap / 2, -1, 1), "drone_1": np.clip(-gap / 2, -1, 1)})
    assert all(out.terminations.values()) and env.agents == []


def test_floor_terminates():
    env = CrazyRLEnv()
    env.reset(seed=0)
    out = env.step({a: np.array([0.0, 0.0, -1.0]) for a in env.agents})
    assert all(out.terminations.values())


def test_out_of_box_action():
    env = CrazyRLEnv()
    env.reset(seed=0)
    with pytest.raises(OutOfBoxAction):
        env.step({a: np.array([2.0, 0.0, 0.0]) for a in env.agents})


@pytest.mark.parametrize("mode", ["surround", "escort", "catch"])
def test_positions_in_bounds_and_episode_telescopes(mode):
    env = CrazyRLEnv(mode=mode, spawn_height=2.0)
    rng = np.random.default_rng(1)
    env.reset(seed=3)
    start, total, steps = env.pos.copy(), 0.0, 0
    target0 = env.target.copy()
    while env.agents:
        act = {a: rng.uniform(-0.05, 0.05, 3) for a in env.agents}
        out = env.step(act)
        total += out.rewards["drone_0"][0]
        steps += 1
        assert np.all(env.pos >= env.cfg.low) and np.all(env.pos <= env.cfg.high)
    assert steps == 200 and out.truncations["drone_0"]
    if mode == "surround":
        expected = np.sum((start - target0) ** 2) - np.sum((env.pos - target0) ** 2)
        assert abs(total - expected) <= 1e-9
