"""Command-line harness: ``momarl list | run | eval | oracle``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
File formats are described in the README; every output file carries a
``format_version``.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from momarl.concepts import pareto_filter
from momarl.envs import ENV_SPECS, make
from momarl.envs.beach import BeachCompatObservation
from momarl.errors import ConfigInvalid, FileInvalid, MomarlError, SpaceTooLarge
from momarl.indicators import cardinality, expected_utility, hypervolume
from momarl.learners import DecompositionLearner, IndependentQLearning, brute_force_pf, evaluate_policy
from momarl.learners.decomposition import bounds_normalisation
from momarl.wrappers import centralise, normalise_rewards

FORMAT_VERSION = 1
CI_METHOD = "normal approximation: mean +/- 1.96 * standard error"

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


# ---------------------------------------------------------------------------
# configuration


def _literal(text: str) -> Any:
    low = text.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null"):
        return None
    try:
        return ast.literal_eval(text.strip())
    except (ValueError, SyntaxError):
        return text.strip()


def parse_seeds(text: str) -> List[int]:
    seeds: List[int] = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = part.split("-", 1)
                seeds.extend(range(int(lo), int(hi) + 1))
            else:
                seeds.append(int(part))
        except ValueError as exc:
            raise ConfigInvalid(f"cannot parse seeds {text!r}") from exc
    if not seeds:
        raise ConfigInvalid("seeds list is empty")
    return seeds


def parse_vector(text: str) -> np.ndarray:
    try:
        v = np.array([float(x) for x in str(text).replace(" ", "").strip("()[]").split(",") if x], dtype=np.float64)
    except ValueError as exc:
        raise ConfigInvalid(f"cannot parse vector {text!r}") from exc
    if v.size == 0:
        raise ConfigInvalid(f"empty vector {text!r}")
    return v


@dataclass
class ExperimentConfig:
    env_id: str
    env_params: Dict[str, Any]
    wrappers: List[str]
    algorithm: Optional[str]
    algo_params: Dict[str, Any]
    weights: Optional[np.ndarray] = None
    seeds: List[int] = field(default_factory=lambda: [0])
    out: str = "results"
    last_n: int = 100
    eval_episodes: int = 1
    ref: Optional[np.ndarray] = None
    horizon: Optional[int] = None

    def make_env(self):
        return build_env(self.env_id, self.env_params, self.wrappers)


WRAPPERS = ("beach_compat", "normalise", "centralise")
ALGORITHMS = ("iql", "decomposition")
_DECOMP_KEYS = ("n_weights", "normalise", "exact_evaluation", "eval_episodes", "n_jobs")


def build_env(env_id: str, params: Dict[str, Any], wrappers: Sequence[str] = ()):
    if env_id not in ENV_SPECS:
        raise ConfigInvalid(f"unknown environment {env_id!r}; see `momarl list`")
    schema = ENV_SPECS[env_id].params()
    unknown = sorted(set(params) - set(schema))
    if unknown:
        raise ConfigInvalid(f"unknown parameters for {env_id}: {', '.join(unknown)}")
    try:
        env = make(env_id, **params)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"invalid parameters for {env_id}: {exc}") from exc
    for name in wrappers:
        if name == "beach_compat":
            env = BeachCompatObservation(env)
        elif name == "normalise":
            env = normalise_rewards(env, bounds_normalisation(env))
        elif name == "centralise":
            env = centralise(env)
        else:
            raise ConfigInvalid(f"unknown wrapper {name!r}; expected one of {WRAPPERS}")
    return env


def load_config(path: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigInvalid(f"malformed config {path}: {exc}") from exc
    if not parser.has_section("env") or "id" not in parser["env"]:
        raise ConfigInvalid("config needs an [env] section with an id")
    env = dict(parser["env"])
    env_id = env.pop("id")
    env_params = {k: _literal(v) for k, v in env.items()}
    wrappers = []
    if parser.has_section("wrappers"):
        stack = parser["wrappers"].get("stack", "")
        wrappers = [w.strip() for w in stack.split(",") if w.strip()]
    # the algorithm section is optional for oracle-only configs
    algo = dict(parser["algorithm"]) if parser.has_section("algorithm") else {}
    algorithm = algo.pop("id", "iql") if parser.has_section("algorithm") else None
    if algorithm is not None and algorithm not in ALGORITHMS:
        raise ConfigInvalid(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    weights = parse_vector(algo.pop("weights")) if "weights" in algo else None
    algo_params = {k: _literal(v) for k, v in algo.items()}
    exp = dict(parser["experiment"]) if parser.has_section("experiment") else {}
    cfg = ExperimentConfig(
        env_id=env_id,
        env_params=env_params,
        wrappers=wrappers,
        algorithm=algorithm,
        algo_params=algo_params,
        weights=weights,
        seeds=parse_seeds(exp.get("seeds", "0")),
        out=exp.get("out", "results"),
        last_n=int(exp.get("last_n", 100)),
        eval_episodes=int(exp.get("eval_episodes", 1)),
        ref=parse_vector(exp["ref"]) if "ref" in exp else None,
        horizon=int(exp["horizon"]) if "horizon" in exp else None,
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    env = cfg.make_env()
    d = env.num_objectives
    learner_keys = set(IndependentQLearning().get_params())
    if cfg.algorithm is None:
        pass
    elif cfg.algorithm == "iql":
        bad = sorted(set(cfg.algo_params) - learner_keys)
        if bad:
            raise ConfigInvalid(f"unknown iql parameters: {', '.join(bad)}")
        if cfg.weights is None and d != 1:
            raise ConfigInvalid(f"iql needs weights for {d} objectives")
        if cfg.weights is not None and cfg.weights.size != d:
            raise ConfigInvalid(f"weights of length {cfg.weights.size} for {d} objectives")
    else:
        bad = sorted(set(cfg.algo_params) - learner_keys - set(_DECOMP_KEYS))
        if bad:
            raise ConfigInvalid(f"unknown decomposition parameters: {', '.join(bad)}")
        if not env.team_reward:
            raise ConfigInvalid(f"decomposition needs a team-reward environment; {cfg.env_id} is not")
    if cfg.ref is not None and cfg.ref.size != d:
        raise ConfigInvalid(f"reference point of length {cfg.ref.size} for {d} objectives")
    if cfg.last_n < 1 or cfg.eval_episodes < 1:
        raise ConfigInvalid("last_n and eval_episodes must be >= 1")


# ---------------------------------------------------------------------------
# result files


def write_pf(path: Path, points: Sequence, ref: Optional[Sequence], metadata: Dict[str, Any]) -> None:
    pts = pareto_filter(points) if len(points) else []
    doc = {
        "format_version": FORMAT_VERSION,
        "points": [[float(x) for x in p] for p in pts],
        "reference": None if ref is None else [float(x) for x in ref],
        "metadata": metadata,
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_pf(path: str) -> Dict[str, Any]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise FileInvalid(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FileInvalid(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise FileInvalid(f"{path}: missing or unsupported format_version")
    pts = doc.get("points")
    if not isinstance(pts, list) or any(not isinstance(p, list) for p in pts):
        raise FileInvalid(f"{path}: points must be a list of lists")
    if pts and len({len(p) for p in pts}) != 1:
        raise FileInvalid(f"{path}: points have different lengths")
    try:
        doc["points"] = [np.array(p, dtype=np.float64) for p in pts]
        if doc.get("reference") is not None:
            doc["reference"] = np.array(doc["reference"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise FileInvalid(f"{path}: non-numeric values") from exc
    return doc


def mean_ci(values: Sequence[float]) -> Dict[str, float]:
    v = np.asarray(values, dtype=np.float64)
    mean = float(v.mean())
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return {"mean": mean, "ci_low": mean - 1.96 * se, "ci_high": mean + 1.96 * se, "n": int(v.size)}


def indicators(points: Sequence, ref: Optional[np.ndarray], n_weights: int = 100) -> Dict[str, Optional[float]]:
    pts = [np.asarray(p, dtype=np.float64) for p in points]
    return {
        "cardinality": cardinality(pts) if pts else 0,
        "hypervolume": None if ref is None or not pts else hypervolume(pts, ref),
        "expected_utility": expected_utility(pts, n_weights=n_weights) if pts else None,
    }


# ---------------------------------------------------------------------------
# metrics recorded per episode


def _env_metrics(cfg: ExperimentConfig) -> Dict[str, Callable]:
    if cfg.env_id == "mo_route_choice":
        return {"mean_travel_time": lambda e: e.unwrapped.mean_travel_time}
    if cfg.env_id == "mo_beach" and cfg.weights is not None:
        w = cfg.weights
        return {"scalarised_team_reward": lambda e: float(w @ e.unwrapped.last_global_reward)}
    return {}


def _run_iql(cfg: ExperimentConfig, seed: int):
    env = cfg.make_env()
    model = IndependentQLearning(**cfg.algo_params).set_params(seed=seed)
    model.fit(env, cfg.weights, metrics=_env_metrics(cfg))
    rows = []
    for ep in range(len(model.learning_curve_)):
        row = {"episode": ep, "seed": seed, "weight_index": 0, "scalarised_reward": model.learning_curve_[ep]}
        row.update({f"objective_{i}": v for i, v in enumerate(model.vector_returns_[ep])})
        row.update({k: v[ep] for k, v in model.metrics_.items()})
        rows.append(row)
    value = evaluate_policy(cfg.make_env(), model.policy_, cfg.eval_episodes, seed=seed)
    finals = {"scalarised_reward": float(model.learning_curve_[-cfg.last_n:].mean())}
    finals.update({k: float(v[-cfg.last_n:].mean()) for k, v in model.metrics_.items()})
    return rows, [value], finals


def _run_decomposition(cfg: ExperimentConfig, seed: int):
    params = dict(cfg.algo_params)
    outer = {k: params.pop(k) for k in _DECOMP_KEYS if k in params}
    outer.setdefault("eval_episodes", cfg.eval_episodes)
    learner = DecompositionLearner(IndependentQLearning(**params), seed=seed, **outer)
    learner.fit(cfg.make_env)
    rows = []
    for k, model in enumerate(learner.models_):
        for ep in range(len(model.learning_curve_)):
            row = {"episode": ep, "seed": seed, "weight_index": k, "scalarised_reward": model.learning_curve_[ep]}
            row.update({f"objective_{i}": v for i, v in enumerate(model.vector_returns_[ep])})
            rows.append(row)
    return rows, learner.front_, {}


def run_experiment(cfg: ExperimentConfig, out_dir: Path, n_weights: int = 100) -> Dict[str, Any]:
    out_dir.mkdir(parents=True, exist_ok=True)
    per_seed: Dict[int, Dict[str, Any]] = {}
    for seed in cfg.seeds:
        runner = _run_iql if cfg.algorithm == "iql" else _run_decomposition
        rows, points, finals = runner(cfg, seed)
        with open(out_dir / f"curve_seed{seed}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["episode", "seed"], lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
        meta = {"env": cfg.env_id, "algorithm": cfg.algorithm, "seed": seed}
        write_pf(out_dir / f"pf_seed{seed}.json", points, cfg.ref, meta)
        front = read_pf(str(out_dir / f"pf_seed{seed}.json"))["points"]
        per_seed[seed] = {"final": finals, "indicators": indicators(front, cfg.ref, n_weights)}
    summary: Dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "env": cfg.env_id,
        "algorithm": cfg.algorithm,
        "seeds": cfg.seeds,
        "last_n": cfg.last_n,
        "confidence_interval": CI_METHOD,
        "final": {},
        "indicators": {},
        "per_seed": {str(s): v for s, v in per_seed.items()},
    }
    metric_names = sorted({k for v in per_seed.values() for k in v["final"]})
    for name in metric_names:
        summary["final"][name] = mean_ci([per_seed[s]["final"][name] for s in cfg.seeds])
    for name in ("cardinality", "hypervolume", "expected_utility"):
        vals = [per_seed[s]["indicators"][name] for s in cfg.seeds]
        summary["indicators"][name] = None if any(v is None for v in vals) else mean_ci(vals)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary


# ---------------------------------------------------------------------------
# commands


def _style(text: str, stream) -> str:
    if os.environ.get("NO_COLOR") or not getattr(stream, "isatty", lambda: False)():
        return text
    return f"\033[1m{text}\033[0m"


def cmd_list(args, out=None) -> int:
    out = out or sys.stdout
    header = f"{'id':<20} {'api':<9} {'agents':<7} {'objectives':<11} {'stoch':<6} {'observability':<14} {'rewards':<17} {'s/a':<4}"
    print(_style(header, out), file=out)
    for spec in ENV_SPECS.values():
        print(
            f"{spec.env_id:<20} {spec.api:<9} {spec.agents:<7} {spec.objectives:<11} "
            f"{'yes' if spec.stochastic else 'no':<6} {spec.observability:<14} "
            f"{'/'.join(spec.reward_modes):<17} {spec.state + '/' + spec.actions:<4}",
            file=out,
        )
        print(f"    {spec.summary}", file=out)
        params = ", ".join(f"{k}={v!r}" for k, v in spec.params().items())
        print(f"    params: {params}", file=out)
    return EXIT_OK


def cmd_run(args, out=None) -> int:
    out = out or sys.stdout
    cfg = load_config(args.config)
    if cfg.algorithm is None:
        raise ConfigInvalid("run needs an [algorithm] section")
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if args.ref is not None:
        cfg.ref = parse_vector(args.ref)
        validate_config(cfg)
    out_dir = Path(args.out or cfg.out)
    summary = run_experiment(cfg, out_dir, n_weights=args.weights or 100)
    for name, s in summary["final"].items():
        print(f"{name}: {s['mean']:.6g} [{s['ci_low']:.6g}, {s['ci_high']:.6g}] (n={s['n']})", file=out)
    print(f"results written to {out_dir}", file=out)
    return EXIT_OK


def cmd_eval(args, out=None) -> int:
    out = out or sys.stdout
    doc = read_pf(args.pf)
    ref = parse_vector(args.ref) if args.ref is not None else doc.get("reference")
    pts = doc["points"]
    if ref is not None and pts and len(ref) != pts[0].size:
        raise FileInvalid(f"reference point of length {len(ref)} for {pts[0].size} objectives")
    vals = indicators(pts, None if ref is None else np.asarray(ref), args.weights or 100)
    for name in ("cardinality", "hypervolume", "expected_utility"):
        v = vals[name]
        print(f"{name}: {'n/a' if v is None else repr(v)}", file=out)
    return EXIT_OK


def cmd_oracle(args, out=None) -> int:
    out = out or sys.stdout
    cfg = load_config(args.config)
    env = cfg.make_env()
    horizon = args.horizon if args.horizon is not None else cfg.horizon
    front = brute_force_pf(env, horizon=horizon, seed=cfg.seeds[0])
    path = Path(args.out or Path(cfg.out) / "oracle_pf.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    ref = parse_vector(args.ref) if args.ref is not None else cfg.ref
    write_pf(path, front, ref, {"env": cfg.env_id, "algorithm": "brute_force", "seed": cfg.seeds[0]})
    print(f"{len(front)} Pareto-optimal points written to {path}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="momarl", description="Multi-objective multi-agent experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list environments")
    run = sub.add_parser("run", help="train and evaluate from a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--ref", help='reference point, e.g. "0,0"')
    run.add_argument("--weights", type=int, help="weight count for expected utility")
    ev = sub.add_parser("eval", help="indicators of a Pareto-front file")
    ev.add_argument("pf")
    ev.add_argument("--ref")
    ev.add_argument("--weights", type=int)
    orc = sub.add_parser("oracle", help="exhaustive Pareto front of a small instance")
    orc.add_argument("--config", required=True)
    orc.add_argument("--horizon", type=int)
    orc.add_argument("--out")
    orc.add_argument("--ref")
    return p


COMMANDS = {"list": cmd_list, "run": cmd_run, "eval": cmd_eval, "oracle": cmd_oracle}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ConfigInvalid, FileInvalid) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpaceTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (MomarlError, RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
