"""Environment registry.

``make(env_id, **params)`` builds an environment; ``ENV_SPECS`` holds the
overview metadata printed by ``momarl list``.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass
from typing import Any, Callable, Dict, Tuple

from momarl.envs.beach import BeachCompatObservation, BeachEnv, beach_section_rewards
from momarl.envs.breakthrough import BreakthroughEnv, BtState, bt_legal_moves, bt_perft, bt_step
from momarl.envs.connect4 import C4State, Connect4Env, c4_legal_moves, c4_step
from momarl.envs.crazyrl import CrazyRLEnv, crazy_rewards, target_update
from momarl.envs.gem_mining import GemMiningEnv, MiningInstance, gem_generate, gem_probabilities
from momarl.envs.item_gathering import ItemGatheringEnv, item_gathering_fixture
from momarl.envs.route_choice import RouteChoiceEnv, RouteChoiceGame, braess_instance, route_step
from momarl.envs.samegame import SameGameEnv, SgState, sg_legal_moves, sg_step


@dataclass(frozen=True)
class EnvSpec:
    env_id: str
    factory: Callable[..., Any]
    api: str  # "parallel" or "aec"
    agents: str
    objectives: str
    stochastic: bool
    observability: str
    reward_modes: Tuple[str, ...]
    state: str
    actions: str
    summary: str

    def params(self) -> Dict[str, Any]:
        sig = inspect.signature(self.factory)
        return {
            name: (None if p.default is inspect.Parameter.empty else p.default)
            for name, p in sig.parameters.items()
            if p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        }


ENV_SPECS: Dict[str, EnvSpec] = {
    s.env_id: s
    for s in (
        EnvSpec("mo_beach", BeachEnv, "parallel", "2-n", "2", False, "partial",
                ("individual", "team"), "d", "d",
                "tourists choose beach sections; capacity and type-mixture objectives"),
        EnvSpec("mo_item_gathering", ItemGatheringEnv, "parallel", "2-n", "2-d", False, "full",
                ("individual", "team"), "d", "d",
                "grid agents collect coloured items, one objective per colour"),
        EnvSpec("mo_gem_mining", GemMiningEnv, "parallel", "2-n", "2-d", True, "stateless",
                ("team",), "-", "d",
                "villages send workers to mines; one objective per gem type"),
        EnvSpec("mo_route_choice", RouteChoiceEnv, "parallel", "2-n", "2", False, "stateless",
                ("individual",), "-", "d",
                "drivers pick routes; travel time and toll objectives"),
        EnvSpec("mo_crazyrl", CrazyRLEnv, "parallel", "2-n", "2", True, "full",
                ("team",), "c", "c",
                "drones surround, escort or catch a target (mode=surround|escort|catch)"),
        EnvSpec("mo_breakthrough", BreakthroughEnv, "aec", "2", "1-4", False, "full",
                ("individual",), "d", "d",
                "race a piece to the far row; win, speed, capture and preservation objectives"),
        EnvSpec("mo_connect4", Connect4Env, "aec", "2", "2 or 2+W", False, "full",
                ("individual",), "d", "d",
                "connect four tokens; win, speed and optional per-column objectives"),
        EnvSpec("mo_samegame", SameGameEnv, "aec", "1-5", "1 or 2-10", False, "full",
                ("individual", "team"), "d", "d",
                "remove same-coloured groups for n^2 points per colour"),
    )
}


def make(env_id: str, **params: Any):
    try:
        spec = ENV_SPECS[env_id]
    except KeyError:
        raise KeyError(f"unknown environment {env_id!r}; known: {sorted(ENV_SPECS)}") from None
    return spec.factory(**params)


__all__ = [
    "ENV_SPECS", "EnvSpec", "make",
    "BeachEnv", "BeachCompatObservation", "beach_section_rewards",
    "BreakthroughEnv", "BtState", "bt_legal_moves", "bt_perft", "bt_step",
    "Connect4Env", "C4State", "c4_legal_moves", "c4_step",
    "CrazyRLEnv", "crazy_rewards", "target_update",
    "GemMiningEnv", "MiningInstance", "gem_generate", "gem_probabilities",
    "ItemGatheringEnv", "item_gathering_fixture",
    "RouteChoiceEnv", "RouteChoiceGame", "braess_instance", "route_step",
    "SameGameEnv", "SgState", "sg_legal_moves", "sg_step",
]
