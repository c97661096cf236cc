"""Multi-objective multi-agent environments, solution concepts and baselines."""

from momarl.core import (
    AECEnv,
    Box,
    Discrete,
    ParallelEnv,
    ParallelToAEC,
    StepOutput,
    Tuple_,
    derive_rng,
    wrap_parallel_as_aec,
)

__version__ = "0.1.0"

__all__ = [
    "AECEnv", "Box", "Discrete", "ParallelEnv", "ParallelToAEC", "StepOutput", "Tuple_",
    "derive_rng", "wrap_parallel_as_aec", "__version__",
]
