"""Truncation-augmented exponential-weights contextual bandit.

The package splits into simplex primitives, the truncation operator,
the self-consistent mixture solver, the online policy, exponential-
weights baselines, seeded environments with a replay format, a runtime
invariant auditor, and a CSV-emitting experiment harness.
"""

from .audit import Auditor, RegretReport, Violation
from .baselines import Exp4Config, Exp4Policy
from .cli import ExperimentConfig, execute, run
from .environments import EnvSpec, RoundData, generate, load_replay, save_replay
from .fixed_point import MixtureWeights, mixture_residual, solve_fixed_point, two_arm_fixed_point
from .policy import (MygaConfig, MygaPolicy, RoundTrace, build_threshold_grid,
                     loss_estimator, schedule_parameters)
from .simplex import ArmPermutation, pivot_index, sample_index, sort_descending, weighted_average
from .truncation import truncate, truncated_mass

__all__ = [
    "ArmPermutation", "Auditor", "EnvSpec", "Exp4Config", "Exp4Policy",
    "ExperimentConfig", "MixtureWeights", "MygaConfig", "MygaPolicy",
    "RegretReport", "RoundData", "RoundTrace", "Violation",
    "build_threshold_grid", "execute", "generate", "load_replay",
    "loss_estimator", "mixture_residual", "pivot_index", "run",
    "sample_index", "save_replay", "schedule_parameters", "solve_fixed_point",
    "sort_descending", "truncate", "truncated_mass", "two_arm_fixed_point",
    "weighted_average",
]
