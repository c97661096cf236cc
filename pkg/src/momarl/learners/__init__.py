"""Baseline learners, evaluation and the Pareto-front oracle."""

from momarl.learners.decomposition import DecompositionLearner, bounds_normalisation
from momarl.learners.evaluation import RandomPolicy, brute_force_pf, evaluate_policy
from momarl.learners.iql import IndependentQLearning, TabularPolicy, observation_key_fn
from momarl.learners.weights import generate_weights

__all__ = [
    "DecompositionLearner", "IndependentQLearning", "RandomPolicy", "TabularPolicy",
    "bounds_normalisation", "brute_force_pf", "evaluate_policy", "generate_weights", "observation_key_fn",
]
