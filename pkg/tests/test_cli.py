"""CLI harness: exit codes, file formats, determinism and indicator parity."""

import json
from pathlib import Path

import numpy as np
import pytest

from momarl.cli import indicators, main, read_pf, write_pf
from momarl.envs import ENV_SPECS
from momarl.indicators import cardinality, expected_utility, hypervolume

FIXTURES = Path(__file__).parent / "fixtures"
CONFIGS = Path(__file__).parent.parent / "configs"

SMALL_IQL = """
[env]
id = mo_item_gathering
height = 3
width = 3
n_colours = 2
horizon = 3
reward_mode = team
item_layout = {(0, 2): 0, (2, 0): 1}
agent_positions = [(0, 0), (2, 2)]

[algorithm]
id = iql
weights = 0.5, 0.5
n_episodes = 50

[experiment]
seeds = 0-1
last_n = 10
ref = 0, 0
"""

SMALL_BEACH = """
[env]
id = mo_beach
n_agents = 10
reward_mode = team

[wrappers]
stack = beach_compat

[algorithm]
id = iql
weights = 0.5, 0.5
n_episodes = 20

[experiment]
seeds = 3
"""


def _write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def _parse_eval(text):
    vals = {}
    for line in text.strip().splitlines():
        name, value = line.split(": ", 1)
        vals[name] = None if value == "n/a" else float(value)
    return vals


# ---------------------------------------------------------------------------
# list and usage errors


def test_list_shows_every_environment(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert len(ENV_SPECS) == 8
    for env_id, spec in ENV_SPECS.items():
        row = next(line for line in out.splitlines() if line.startswith(env_id))
        assert spec.objectives in row
    assert out.count("params:") == 8


def test_unknown_flag_is_usage_error(capsys):
    assert main(["list", "--bogus"]) == 2
    assert main(["frobnicate"]) == 2
    assert main([]) == 2


@pytest.mark.parametrize(
    "text",
    [
        "[env]\nid = no_such_env\n",
        "[env]\nid = mo_beach\nbogus_param = 3\n",
        "[env]\nid = mo_beach\n[algorithm]\nid = iql\n",  # weights missing for d = 2
        "[env]\nid = mo_beach\n[algorithm]\nid = iql\nweights = 1, 0, 0\n",
        "[env]\nid = mo_route_choice\n[algorithm]\nid = decomposition\n",  # not team reward
        "[env]\nid = mo_beach\n[algorithm]\nid = sarsa\n",
        "[env]\nid = mo_beach\n[algorithm]\nweights = 1, 0\n[experiment]\nseeds = a-b\n",
        "[env]\nid = mo_beach\n",  # run without an algorithm
        "no sections at all",
    ],
)
def test_invalid_config_exits_2(tmp_path, text):
    assert main(["run", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")]) == 2


def test_missing_config_exits_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.ini")]) == 2


@pytest.mark.parametrize(
    "content",
    ["not json", json.dumps({"points": [[1, 1]]}), json.dumps({"format_version": 1, "points": [[1], [1, 2]]})],
)
def test_invalid_pf_file_exits_2(tmp_path, content):
    path = tmp_path / "pf.json"
    path.write_text(content, encoding="utf-8")
    assert main(["eval", str(path)]) == 2


def test_eval_ref_length_mismatch_exits_2(tmp_path):
    path = tmp_path / "pf.json"
    write_pf(path, [np.array([1.0, 1.0])], [0.0, 0.0], {})
    assert main(["eval", str(path), "--ref", "0,0,0"]) == 2


def test_oracle_too_large_exits_1(tmp_path):
    text = "[env]\nid = mo_item_gathering\nreward_mode = team\nhorizon = 50\n"
    assert main(["oracle", "--config", _write(tmp_path, text), "--out", str(tmp_path / "pf.json")]) == 1
    assert not (tmp_path / "pf.json").exists()


# ---------------------------------------------------------------------------
# PF file


def test_pf_round_trip_is_lossless(tmp_path):
    rng = np.random.default_rng(0)
    pts = [rng.random(3) for _ in range(20)]
    path = tmp_path / "pf.json"
    write_pf(path, pts, [0.0, 0.0, 0.0], {"env": "x", "algorithm": "y", "seed": 1})
    doc = read_pf(str(path))
    from momarl.concepts import pareto_filter

    expected = pareto_filter(pts)
    assert len(doc["points"]) == len(expected)
    for a, b in zip(doc["points"], expected):
        assert np.array_equal(a, b)
    assert doc["metadata"] == {"env": "x", "algorithm": "y", "seed": 1}


def test_pf_write_drops_dominated(tmp_path):
    path = tmp_path / "pf.json"
    write_pf(path, [np.array([1.0, 1.0]), np.array([0.5, 0.5]), np.array([2.0, 0.0])], None, {})
    pts = read_pf(str(path))["points"]
    assert sorted(map(tuple, pts)) == [(1.0, 1.0), (2.0, 0.0)]


# ---------------------------------------------------------------------------
# eval


def test_eval_single_point(tmp_path, capsys):
    path = tmp_path / "pf.json"
    write_pf(path, [np.array([1.0, 1.0])], [0.0, 0.0], {})
    assert main(["eval", str(path)]) == 0
    vals = _parse_eval(capsys.readouterr().out)
    assert vals["cardinality"] == 1 and vals["hypervolume"] == 1.0


def test_eval_two_points_with_ref_flag(tmp_path, capsys):
    path = tmp_path / "pf.json"
    write_pf(path, [np.array([2.0, 1.0]), np.array([1.0, 2.0])], None, {})
    assert main(["eval", str(path), "--ref", "0,0", "--weights", "3"]) == 0
    vals = _parse_eval(capsys.readouterr().out)
    assert vals["hypervolume"] == 3.0 and vals["cardinality"] == 2
    pts = [np.array([2.0, 1.0]), np.array([1.0, 2.0])]
    assert vals["expected_utility"] == expected_utility(pts, n_weights=3)


def test_eval_without_reference_reports_na(tmp_path, capsys):
    path = tmp_path / "pf.json"
    write_pf(path, [np.array([1.0, 0.0])], None, {})
    assert main(["eval", str(path)]) == 0
    assert _parse_eval(capsys.readouterr().out)["hypervolume"] is None


# ---------------------------------------------------------------------------
# run


def _run(tmp_path, text, out_name, *extra):
    out_dir = tmp_path / out_name
    assert main(["run", "--config", _write(tmp_path, text), "--out", str(out_dir), *extra]) == 0
    return out_dir


def test_run_outputs_are_byte_identical(tmp_path):
    a = _run(tmp_path, SMALL_IQL, "a")
    b = _run(tmp_path, SMALL_IQL, "b")
    names = sorted(p.name for p in a.iterdir())
    assert names == ["curve_seed0.csv", "curve_seed1.csv", "pf_seed0.json", "pf_seed1.json", "summary.json"]
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_run_curve_and_summary_format(tmp_path):
    out = _run(tmp_path, SMALL_IQL, "a")
    lines = (out / "curve_seed0.csv").read_text().splitlines()
    assert lines[0].split(",")[:2] == ["episode", "seed"]
    assert len(lines) == 51
    summary = json.loads((out / "summary.json").read_text())
    assert summary["format_version"] == 1 and summary["seeds"] == [0, 1]
    s = summary["final"]["scalarised_reward"]
    assert s["ci_low"] <= s["mean"] <= s["ci_high"] and s["n"] == 2
    assert "1.96" in summary["confidence_interval"]


def test_eval_of_run_output_matches_library(tmp_path, capsys):
    out = _run(tmp_path, SMALL_IQL, "a")
    capsys.readouterr()
    assert main(["eval", str(out / "pf_seed0.json")]) == 0
    vals = _parse_eval(capsys.readouterr().out)
    pts = read_pf(str(out / "pf_seed0.json"))["points"]
    ref = np.zeros(2)
    assert vals["cardinality"] == cardinality(pts)
    assert vals["hypervolume"] == hypervolume(pts, ref)
    assert vals["expected_utility"] == expected_utility(pts, n_weights=100)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["per_seed"]["0"]["indicators"] == indicators(pts, ref)


def test_seed_override(tmp_path):
    out = _run(tmp_path, SMALL_IQL, "a", "--seed", "7")
    assert sorted(p.name for p in out.glob("*.csv")) == ["curve_seed7.csv"]
    assert json.loads((out / "summary.json").read_text())["seeds"] == [7]


def test_beach_team_run_writes_curve(tmp_path):
    out = _run(tmp_path, SMALL_BEACH, "beach")
    header = (out / "curve_seed3.csv").read_text().splitlines()[0]
    assert "scalarised_team_reward" in header


def test_ref_flag_overrides_config(tmp_path):
    out = _run(tmp_path, SMALL_BEACH, "beach", "--ref", "0,0")
    summary = json.loads((out / "summary.json").read_text())
    assert summary["indicators"]["hypervolume"] is not None


def test_shipped_configs_validate():
    from momarl.cli import load_config

    for path in sorted(CONFIGS.glob("*.ini")):
        load_config(str(path))


# ---------------------------------------------------------------------------
# oracle


def test_oracle_reproduces_fixture_file(tmp_path):
    out = tmp_path / "pf.json"
    assert main(["oracle", "--config", str(CONFIGS / "item_gathering_oracle.ini"), "--out", str(out)]) == 0
    assert out.read_bytes() == (FIXTURES / "item_gathering_oracle_pf.json").read_bytes()


def test_oracle_route_choice_two_agents(tmp_path):
    text = "[env]\nid = mo_route_choice\nn_agents = 2\n"
    out = tmp_path / "pf.json"
    assert main(["oracle", "--config", _write(tmp_path, text), "--out", str(out), "--ref=-100,-100"]) == 0
    doc = read_pf(str(out))
    assert 1 <= len(doc["points"]) <= 9
    assert np.array_equal(doc["reference"], [-100.0, -100.0])
