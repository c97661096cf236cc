"""Decomposition: a Pareto front from a family of scalarised team problems.

For every weight vector the team reward is normalised, linearised and
handed to a single-objective learner; the greedy joint policy is evaluated
on the original vector-reward environment and its value enters a
non-dominated archive.
"""

from __future__ import annotations

import copy
from typing import Any, Callable, List, Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, clone

from momarl.concepts import ParetoArchive
from momarl.core import ParallelEnv
from momarl.errors import NotTeamReward
from momarl.learners.evaluation import evaluate_policy
from momarl.learners.iql import IndependentQLearning
from momarl.learners.weights import generate_weights
from momarl.wrappers import LineariseReward, NormalisationSpec, normalise_rewards

EnvSource = Union[ParallelEnv, Callable[[], ParallelEnv]]


def bounds_normalisation(env: ParallelEnv) -> List[NormalisationSpec]:
    """One spec per agent and objective from the env's declared reward bounds."""
    specs = []
    for agent in env.possible_agents:
        low, high = env.reward_bounds(agent)
        for i, (lo, hi) in enumerate(zip(low, high)):
            if hi > lo:
                specs.append(NormalisationSpec(agent, i, float(lo), float(hi)))
    return specs


class DecompositionLearner(BaseEstimator):
    """Weighted-sum decomposition over a uniform simplex weight grid.

    Parameters
    ----------
    learner:
        Estimator with ``fit(env, weights=None)`` exposing ``policy_`` after
        fitting; cloned per weight with ``seed = seed + k``. Defaults to
        :class:`IndependentQLearning` with default hyperparameters.
    n_weights:
        Number of weight vectors.
    normalise:
        ``"bounds"`` to rescale by ``reward_bounds``, ``None`` for raw
        rewards, or an explicit list of :class:`NormalisationSpec`.
    exact_evaluation:
        Use the analytic expectation (gem mining) instead of sampling.
    """

    def __init__(
        self,
        learner: Optional[BaseEstimator] = None,
        n_weights: int = 10,
        normalise: Union[str, None, Sequence[NormalisationSpec]] = "bounds",
        eval_episodes: int = 1,
        exact_evaluation: bool = False,
        seed: int = 0,
        n_jobs: int = 1,
    ):
        self.learner = learner
        self.n_weights = n_weights
        self.normalise = normalise
        self.eval_episodes = eval_episodes
        self.exact_evaluation = exact_evaluation
        self.seed = seed
        self.n_jobs = n_jobs

    def _specs(self, env: ParallelEnv) -> List[NormalisationSpec]:
        if self.normalise is None:
            return []
        if isinstance(self.normalise, str):
            if self.normalise != "bounds":
                raise ValueError(f"unknown normalisation {self.normalise!r}")
            return bounds_normalisation(env)
        return list(self.normalise)

    def _solve(self, make_env: Callable[[], ParallelEnv], k: int, w: np.ndarray):
        train_env = make_env()
        wrapped = LineariseReward(normalise_rewards(train_env, self._specs(train_env)), w)
        base = self.learner if self.learner is not None else IndependentQLearning()
        model = clone(base).set_params(seed=self.seed + k)
        model.fit(wrapped)
        value = evaluate_policy(
            make_env(), model.policy_, self.eval_episodes, seed=self.seed + k, exact=self.exact_evaluation
        )
        return model, value

    def fit(self, env: EnvSource, front: Optional[Sequence] = None) -> "DecompositionLearner":
        """Run the loop. ``front`` is accepted for interface parity with
        adaptive weight generation but is ignored by the uniform grid."""
        if isinstance(env, ParallelEnv):
            proto = env
            make_env = lambda: copy.deepcopy(proto)  # noqa: E731
        else:
            make_env = env
            proto = make_env()
        if not proto.team_reward:
            raise NotTeamReward(f"{type(proto.unwrapped).__name__} does not use a team reward")
        self.weights_ = generate_weights(self.n_weights, proto.num_objectives)
        results = Parallel(n_jobs=self.n_jobs)(
            delayed(self._solve)(make_env, k, w) for k, w in enumerate(self.weights_)
        )
        self.models_ = [m for m, _ in results]
        self.values_ = [v for _, v in results]
        self.archive_ = ParetoArchive()
        for k, v in enumerate(self.values_):
            self.archive_.add(v, tag=k)
        return self

    @property
    def front_(self) -> List[np.ndarray]:
        return self.archive_.vectors

    def policies(self) -> List[Any]:
        return [self.models_[k].policy_ for k in self.archive_.tags]
