import os

import numpy as np
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_parallel_actions(env, rng):
    return {a: env.action_space(a).sample(rng) for a in env.agents}


def random_legal_action(env, rng):
    """Random legal action for the current AEC agent (None when it is done)."""
    agent = env.agent_selection
    if env.terminations[agent] or env.truncations[agent]:
        return None
    mask = env.infos[agent].get("action_mask")
    if mask is None:
        return env.action_space(agent).sample(rng)
    return int(rng.choice(np.flatnonzero(mask)))


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
