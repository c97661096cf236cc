import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_legal_action, random_parallel_actions
from helpers import Counter
from momarl import Box, Discrete, ParallelToAEC, Tuple_, derive_rng, wrap_parallel_as_aec
from momarl.envs import Connect4Env, make
from momarl.errors import (
    ActionGivenForTerminatedAgent,
    MissingAgentAction,
    OutOfSpaceAction,
    SteppedTerminalEnv,
    UnknownAgent,
)


# ---------------------------------------------------------------- spaces


def test_discrete_contains_and_sample():
    s = Discrete(3)
    assert 0 in s and 2 in s and np.int64(1) in s
    assert 3 not in s and -1 not in s and 1.5 not in s
    rng = np.random.default_rng(0)
    assert all(s.sample(rng) in s for _ in range(50))


def test_box_contains_shape_and_dtype():
    b = Box.uniform(-1.0, 1.0, (3,))
    assert b.shape == (3,)
    assert np.zeros(3) in b
    assert np.full(3, 1.5) not in b
    assert np.zeros(2) not in b
    rng = np.random.default_rng(0)
    assert b.sample(rng) in b


def test_tuple_space():
    t = Tuple_((Discrete(2), Discrete(3)))
    assert (1, 2) in t
    assert (2, 0) not in t
    assert t.sample(np.random.default_rng(0)) in t


def test_derive_rng_streams_independent_and_reproducible():
    a1 = derive_rng(7, "layout").random(5)
    a2 = derive_rng(7, "layout").random(5)
    b = derive_rng(7, "transition").random(5)
    np.testing.assert_array_equal(a1, a2)
    assert not np.array_equal(a1, b)


# ------------------------------------------------------- parallel contract


def test_parallel_step_validates_actions():
    env = Counter(n=2)
    env.reset(seed=0)
    with pytest.raises(MissingAgentAction):
        env.step({"agent_0": 0})
    with pytest.raises(OutOfSpaceAction):
        env.step({"agent_0": 0, "agent_1": 5})
    with pytest.raises(UnknownAgent):
        env.step({"agent_0": 0, "agent_1": 0, "ghost": 0})


def test_stepping_terminal_env_raises():
    env = Counter(n=2, horizon=1)
    env.reset(seed=0)
    env.step({"agent_0": 0, "agent_1": 0})
    assert env.agents == []
    with pytest.raises(SteppedTerminalEnv):
        env.step({})


def test_step_before_reset_raises():
    with pytest.raises(SteppedTerminalEnv):
        Counter().step({})


def test_step_output_unpacks():
    env = Counter(n=2)
    env.reset(seed=0)
    obs, rew, term, trunc, info = env.step({"agent_0": 1, "agent_1": 2})
    np.testing.assert_array_equal(rew["agent_1"], [2.0, 1.0])


PARALLEL_IDS = {
    "mo_beach": dict(n_agents=10),
    "mo_item_gathering": dict(height=5, width=5, horizon=20),
    "mo_gem_mining": dict(n_villages=3),
    "mo_route_choice": dict(n_agents=6),
    "mo_crazyrl": dict(horizon=30),
}


@pytest.mark.parametrize("env_id", sorted(PARALLEL_IDS))
def test_key_set_coherence_and_finite_rewards(env_id):
    env = make(env_id, **PARALLEL_IDS[env_id])
    rng = np.random.default_rng(1)
    for episode in range(5):
        obs, infos = env.reset(seed=episode)
        assert set(obs) == set(env.agents) == set(infos)
        while env.agents:
            live = set(env.agents)
            out = env.step(random_parallel_actions(env, rng))
            for m in (out.observations, out.rewards, out.terminations, out.truncations, out.infos):
                assert set(m) == live
            for r in out.rewards.values():
                assert r.shape == (env.num_objectives,) and np.all(np.isfinite(r))
            for a, o in out.observations.items():
                assert env.observation_space(a).contains(o)


# ------------------------------------------------------------ AEC contract


def test_board_turn_order_alternates():
    env = Connect4Env()
    env.reset(seed=0)
    order = []
    for _ in range(6):
        order.append(env.agent_selection)
        env.step(0 if len(order) % 2 else 1)
    assert order == ["player_0", "player_1"] * 3


def test_aec_rewards_accumulate_between_turns():
    env = wrap_parallel_as_aec(Counter(n=2, horizon=5))
    env.reset(seed=0)
    # each full cycle credits (own action, t) to both agents
    env.step(2)  # agent_0
    env.step(1)  # agent_1 -> parallel step 1 fires
    _, r0, *_ = env.last()
    np.testing.assert_array_equal(r0, [2.0, 1.0])
    env.step(0)
    _, r1, *_ = env.last()
    assert env.agent_selection == "agent_1"
    np.testing.assert_array_equal(r1, [1.0, 1.0])


def test_aec_dead_agent_requires_none_and_is_removed():
    env = wrap_parallel_as_aec(Counter(n=2, horizon=1))
    env.reset(seed=0)
    env.step(0)
    env.step(0)
    agent = env.agent_selection
    assert env.truncations[agent]
    with pytest.raises(ActionGivenForTerminatedAgent):
        env.step(0)
    env.step(None)
    assert agent not in env.agents
    env.step(None)
    assert env.agents == []
    with pytest.raises(SteppedTerminalEnv):
        env.step(None)


def test_aec_live_agent_must_act_and_stay_in_space():
    env = wrap_parallel_as_aec(Counter(n=2))
    env.reset(seed=0)
    with pytest.raises(MissingAgentAction):
        env.step(None)
    with pytest.raises(OutOfSpaceAction):
        env.step(9)


def test_adapter_steps_once_per_full_cycle():
    inner = Counter(n=3, horizon=10)
    env = ParallelToAEC(inner)
    env.reset(seed=0)
    for k in range(1, 10):
        env.step(0)
        assert inner.steps == k // 3


def test_single_agent_adapter_is_pass_through():
    inner, ref = Counter(n=1, horizon=3), Counter(n=1, horizon=3)
    env = wrap_parallel_as_aec(inner)
    env.reset(seed=0)
    ref.reset(seed=0)
    for a in (2, 0, 1):
        env.step(a)
        out = ref.step({"agent_0": a})
        obs, r, term, trunc, _ = env.last()
        assert obs == out.observations["agent_0"]
        np.testing.assert_array_equal(r, out.rewards["agent_0"])
        assert trunc == out.truncations["agent_0"]


def _parallel_trajectory(env, seed, rng):
    obs, _ = env.reset(seed=seed)
    steps, actions = [], []
    while env.agents:
        act = random_parallel_actions(env, rng)
        out = env.step(act)
        actions.append(act)
        steps.append(out)
    return obs, actions, steps


def _aec_replay(env, seed, actions):
    aec = wrap_parallel_as_aec(env)
    obs, _ = aec.reset(seed=seed)
    outputs = []
    for act in actions:
        for agent in list(env.agents):
            assert aec.agent_selection == agent
            aec.step(act[agent])
        outputs.append(aec.last_step_output)
        # retire finished agents
        while aec.agents and (aec.terminations[aec.agent_selection] or aec.truncations[aec.agent_selection]):
            aec.step(None)
    assert aec.agents == []
    return obs, outputs


def _same(x, y):
    if isinstance(x, dict):
        return x.keys() == y.keys() and all(_same(x[k], y[k]) for k in x)
    if isinstance(x, (tuple, list)):
        return len(x) == len(y) and all(_same(a, b) for a, b in zip(x, y))
    return np.array_equal(np.asarray(x), np.asarray(y))


@pytest.mark.parametrize("env_id", sorted(PARALLEL_IDS))
def test_aec_parallel_cross_mode_equivalence(env_id):
    params = dict(PARALLEL_IDS[env_id])
    for k in range(100):
        rng = np.random.default_rng(k)
        obs_p, actions, steps = _parallel_trajectory(make(env_id, **params), k, rng)
        obs_a, outputs = _aec_replay(make(env_id, **params), k, actions)
        assert _same(obs_p, obs_a)
        for p, a in zip(steps, outputs):
            assert _same(p.observations, a.observations)
            assert _same(p.rewards, a.rewards)
            assert p.terminations == a.terminations and p.truncations == a.truncations


def test_aec_last_matches_parallel_rewards():
    env = make("mo_item_gathering", height=4, width=4, horizon=6, reward_mode="team")
    ref = make("mo_item_gathering", height=4, width=4, horizon=6, reward_mode="team")
    rng = np.random.default_rng(3)
    ref.reset(seed=5)
    aec = wrap_parallel_as_aec(env)
    aec.reset(seed=5)
    while ref.agents:
        act = random_parallel_actions(ref, rng)
        out = ref.step(act)
        for agent in list(env.agents):
            aec.step(act[agent])
        for agent in out.rewards:
            np.testing.assert_array_equal(aec._cumulative_rewards[agent], out.rewards[agent])


# ------------------------------------------------------------- determinism


def _trajectory_bytes(env_id, params, seed):
    env = make(env_id, **params)
    rng = np.random.default_rng(seed)
    chunks = []
    obs, _ = env.reset(seed=seed)
    chunks.append(repr(obs))
    if hasattr(env, "agent_iter"):
        for agent in env.agent_iter(max_iter=400):
            o, r, term, trunc, _ = env.last()
            chunks.append(repr((agent, np.asarray(o).tobytes(), r.tobytes(), term, trunc)))
            env.step(random_legal_action(env, rng))
    else:
        while env.agents:
            out = env.step(random_parallel_actions(env, rng))
            chunks.append(repr(sorted((a, np.asarray(o).tobytes()) for a, o in out.observations.items())))
            chunks.append(repr(sorted((a, r.tobytes()) for a, r in out.rewards.items())))
    chunks.append(env.state_fingerprint())
    return "".join(chunks).encode()


ALL_IDS = {
    **PARALLEL_IDS,
    "mo_breakthrough": dict(width=5, height=6),
    "mo_connect4": dict(column_objectives=True),
    "mo_samegame": dict(width=6, height=6, n_colours=3, n_agents=2),
}


@pytest.mark.parametrize("env_id", sorted(ALL_IDS))
@given(seed=st.integers(0, 2**20))
def test_seeded_runs_are_byte_identical(env_id, seed):
    a = _trajectory_bytes(env_id, ALL_IDS[env_id], seed)
    assert a == _trajectory_bytes(env_id, ALL_IDS[env_id], seed)
