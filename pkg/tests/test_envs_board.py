import numpy as np
import pytest
from hypothesis import given, strategies as st

from board_oracles import bt_oracle_perft, bt_start, c4_line_winner, sg_settled
from conftest import random_legal_action
from momarl.envs import (
    BreakthroughEnv,
    BtState,
    C4State,
    Connect4Env,
    SameGameEnv,
    SgState,
    bt_legal_moves,
    bt_perft,
    bt_step,
    c4_legal_moves,
    c4_step,
    sg_legal_moves,
    sg_step,
)
from momarl.envs.board import board_from_text, board_to_text
from momarl.envs.breakthrough import decode_move, encode_move
from momarl.envs.samegame import sg_random_board
from momarl.errors import FileInvalid, FullColumn, GameOver, GroupTooSmall, IllegalMove

# ---------------------------------------------------------------- connect4


def play(state, cols):
    rewards = None
    for c in cols:
        state, rewards = c4_step(state, c)
    return state, rewards


def test_c4_fresh_board_width_moves():
    assert c4_legal_moves(C4State()) == frozenset(range(7))
    assert len(c4_legal_moves(C4State(width=11, height=5))) == 11


def test_c4_vertical_win_on_move_seven():
    state, rewards = play(C4State(), [0, 1, 0, 1, 0, 1, 0])
    assert state.over and state.winner == 0 and state.moves == 7
    assert rewards[0][0] == 1.0 and rewards[1][0] == -1.0
    speed = 1 - 7 / 42
    assert rewards[0][1] == pytest.approx(speed) and rewards[1][1] == pytest.approx(-speed)
    with pytest.raises(GameOver):
        c4_step(state, 3)


def test_c4_column_objective():
    # p0 places three tokens in column 0, p1 spreads over other columns; p1 then wins horizontally
    state, rewards = play(C4State(column_objectives=True), [0, 1, 0, 2, 0, 3, 6, 4])
    assert state.winner == 1
    assert rewards[0][2] == pytest.approx(0.5) and rewards[1][2] == pytest.approx(-0.5)
    assert len(rewards[0]) == 2 + 7


def test_c4_full_column_and_draw():
    state = C4State(width=4, height=4)
    state, _ = play(state, [0, 0, 0, 0])
    with pytest.raises(FullColumn):
        c4_step(state, 0)
    # a 4x4 draw
    draw, rewards = play(C4State(width=4, height=4), [3, 2, 2, 2, 2, 3, 0, 3, 3, 0, 0, 1, 1, 0, 1, 1])
    assert draw.over and draw.winner == -1
    np.testing.assert_array_equal(rewards[0], [0, 0])


def test_c4_text_round_trip():
    state, _ = play(C4State(), [3, 3, 2, 4])
    text = state.to_text()
    back = C4State.from_text(text)
    assert back.columns == state.columns and back.mover == state.mover
    with pytest.raises(FileInvalid):
        C4State.from_text("0......\n.......\n.......\n.......\n.......\n.......")


def test_c4_playouts_agree_with_line_scan_oracle():
    # lines never disappear, so a clean penultimate board means no win was missed
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        state, prev, rewards = C4State(), None, None
        while not state.over:
            assert state.mover == state.moves % 2
            prev = state
            state, rewards = c4_step(state, int(rng.choice(sorted(c4_legal_moves(state)))))
        assert c4_line_winner(prev.grid()) == -1
        assert c4_line_winner(state.grid()) == state.winner
        assert rewards[0][0] + rewards[1][0] == 0
        assert -1 <= rewards[0][1] <= 1


def test_c4_env_observation_and_masks():
    env = Connect4Env(width=5, height=4)
    env.reset(seed=0)
    env.step(2)
    obs1 = env.observe("player_1")
    assert obs1[-1, 2] == 2 and env.observe("player_0")[-1, 2] == 1
    assert env.infos["player_1"]["action_mask"].sum() == 5
    assert env.infos["player_0"]["action_mask"].sum() == 0


def test_c4_env_terminal_flow():
    env = Connect4Env()
    env.reset(seed=0)
    for c in [0, 1, 0, 1, 0, 1, 0]:
        env.step(c)
    assert all(env.terminations.values())
    rewards = {}
    for agent in env.agent_iter():
        _, r, term, _, _ = env.last()
        assert term
        rewards[agent] = r
        env.step(None)
    assert rewards["player_0"][0] == 1 and rewards["player_1"][0] == -1
    with pytest.raises(GameOver):
        env.step(0)


def test_c4_env_board_option():
    env = Connect4Env()
    env.reset(options={"board": ".......\n.......\n.......\n.......\n.......\n0011010"})
    assert env.game.moves == 7 and env.agent_selection == "player_1"


# ------------------------------------------------------------- breakthrough


def test_bt_opening_moves():
    assert len(bt_legal_moves(BtState())) == 22


def test_bt_perft_matches_oracle_and_frozen_values():
    frozen = {1: 22, 2: 484, 3: 11132}
    start = bt_start(8, 8)
    for depth, value in frozen.items():
        assert bt_oracle_perft(start, 0, 8, 8, depth) == value
        assert bt_perft(BtState(), depth) == value


@pytest.mark.parametrize("w, h", [(3, 5), (5, 6), (6, 7)])
def test_bt_perft_small_boards_match_oracle(w, h):
    for depth in (1, 2, 3, 4):
        assert bt_perft(BtState(w, h), depth) == bt_oracle_perft(bt_start(w, h), 0, w, h, depth)


def test_bt_straight_onto_occupied_is_illegal():
    state = BtState.from_text("....\n.1..\n.0..\n....\n....")
    # player 0 piece at row 2 (from bottom), col 1; opponent straight ahead
    with pytest.raises(IllegalMove):
        bt_step(state, (2, 1, 3, 1))


def test_bt_capture_objective():
    state = BtState.from_text("1...\n....\n..1.\n.0..\n....\n0...")
    nxt, rewards = bt_step(state, (2, 1, 3, 2))
    assert nxt.captures == (1, 0) and rewards is None
    finished = BtState.from_text("....\n..0.\n....\n....\n....\n1...", mover=0)
    done, rewards = bt_step(finished, (4, 2, 5, 2))
    assert done.winner == 0
    np.testing.assert_allclose(rewards[0][[0, 2, 3]], [1, 0, 0])
    # the capture shows up on both players' terminal vectors
    s = state
    for move in [(2, 1, 3, 2), (5, 0, 4, 0), (3, 2, 4, 2), (4, 0, 3, 0)]:
        s, rewards = bt_step(s, move)
        assert rewards is None
    s, rewards = bt_step(s, (4, 2, 5, 2))
    assert s.winner == 0
    assert rewards[0][2] == pytest.approx(1 / 8) and rewards[1][3] == pytest.approx(-1 / 8)


def test_bt_move_encoding_round_trip():
    for move in bt_legal_moves(BtState()):
        assert decode_move(8, 0, encode_move(8, move)) == move


@given(st.integers(0, 10_000))
def test_bt_random_games_invariants(seed):
    rng = np.random.default_rng(seed)
    state, rewards = BtState(5, 6), None
    initial = state.pieces(0)
    prev = (state.pieces(0), state.pieces(1))
    while not state.over:
        moves = sorted(bt_legal_moves(state))
        state, rewards = bt_step(state, moves[rng.integers(len(moves))])
        now = (state.pieces(0), state.pieces(1))
        assert now[0] <= prev[0] and now[1] <= prev[1]
        assert state.captures[1] + now[0] == initial and state.captures[0] + now[1] == initial
        prev = now
    assert rewards[0][0] + rewards[1][0] == 0
    assert all(-1 <= r[1] <= 1 for r in rewards)


def test_bt_env_plays_through():
    env = BreakthroughEnv(width=4, height=5, n_objectives=2)
    rng = np.random.default_rng(0)
    env.reset(seed=0)
    totals = {a: np.zeros(2) for a in env.possible_agents}
    for agent in env.agent_iter():
        _, r, *_ = env.last()
        totals[agent] += r
        env.step(random_legal_action(env, rng))
    assert totals["player_0"][0] + totals["player_1"][0] == 0


# ----------------------------------------------------------------- samegame


def sg(text, **kw):
    return SgState.from_text(text, **kw)


def test_sg_group_of_three_scores_nine():
    state = sg("1..\n1..\n102", n_colours=3)
    nxt, rewards = sg_step(state, (0, 0))
    assert rewards[0][1] == 9 and rewards.sum() == 9


def test_sg_full_column_removal_shifts_left():
    state = sg("00.\n001\n002", n_colours=3)
    nxt, _ = sg_step(state, (0, 0))
    assert nxt.to_text() == "...\n1..\n2..\n"


def test_sg_monochrome_two_by_two():
    env = SameGameEnv(width=3, height=3, n_colours=2, board="...\n00.\n00.")
    env.reset(seed=0)
    assert len(env.legal_actions()) == 4 and len(sg_legal_moves(env.game)) == 1
    env.step(0)
    assert env.game.over and all(env.terminations.values())
    _, r, *_ = env.last()
    assert r[0] == 16


def test_sg_errors():
    state = sg("01\n10\n01")
    with pytest.raises(GroupTooSmall):
        sg_step(sg("001\n110\n221"), (2, 2))
    with pytest.raises(GameOver):
        sg_step(state, (0, 0))
    with pytest.raises(FileInvalid):
        sg(".0\n0.")


def test_sg_single_objective_mode():
    state = sg("1..\n1..\n102", n_colours=3)
    _, rewards = sg_step(state, (0, 0), per_colour=False)
    assert rewards.shape == (1, 1) and rewards[0, 0] == 9


@given(st.integers(0, 10_000), st.integers(2, 4), st.booleans())
def test_sg_playout_invariants(seed, agents, team):
    rng = np.random.default_rng(seed)
    state = SgState(sg_random_board(rng, 5, 6, 3), 3, agents)
    tiles = int(np.sum(state.tiles >= 0))
    cumulative = np.zeros((agents, 3))
    while not state.over:
        groups = sorted(sg_legal_moves(state))
        before = state.tiles
        state, rewards = sg_step(state, groups[rng.integers(len(groups))], team=team)
        removed = tiles - int(np.sum(state.tiles >= 0))
        assert rewards.sum() / (agents if team else 1) == removed**2
        tiles -= removed
        assert sg_settled(state.tiles)
        assert np.sum(state.tiles >= 0) < np.sum(before >= 0)
        cumulative += rewards
    np.testing.assert_array_equal(cumulative, state.scores)
    if team:
        assert np.all(cumulative == cumulative[0])


def test_sg_env_team_cumulative_identical():
    env = SameGameEnv(width=6, height=6, n_colours=3, n_agents=3, reward_mode="team")
    rng = np.random.default_rng(5)
    env.reset(seed=5)
    totals = {a: np.zeros(3) for a in env.possible_agents}
    for agent in env.agent_iter():
        _, r, *_ = env.last()
        totals[agent] += r
        env.step(random_legal_action(env, rng))
    # every agent's last() sums its rewards since its previous turn
    for a in env.possible_agents:
        np.testing.assert_array_equal(totals[a], env.game.scores[0])


def test_board_text_helpers():
    grid = board_from_text("0.\n12")
    np.testing.assert_array_equal(grid, [[0, -1], [1, 2]])
    assert board_to_text(grid) == "0.\n12\n"
    with pytest.raises(FileInvalid):
        board_from_text("0a\n12")
