"""Normalized SGD with Hessian-corrected momentum and clipping under heavy-tailed noise."""

from .clipping import clip, clip_hvp
from .exceptions import ConfigurationError, ContractError, DomainError, HessClipError
from .noise import TailSpec
from .numerics import RandomSource
from .optimizers import NSGD, NSGDM, ClipNSGDHess, ClipNSGDM, NSGDHess, make_optimizer, run
from .problems import CubicProblem, QuadraticProblem, StochasticOracle, WellsProblem
from .schedules import ProblemConstants, Schedule, schedule_clip_nsgdm_baseline, schedule_thm2, schedule_thm3
from .trace import RunTrace, iterations_to_target

__version__ = "0.1.0"

__all__ = [
    "NSGD", "NSGDM", "ClipNSGDM", "NSGDHess", "ClipNSGDHess", "make_optimizer", "run",
    "clip", "clip_hvp", "TailSpec", "RandomSource",
    "StochasticOracle", "QuadraticProblem", "WellsProblem", "CubicProblem",
    "ProblemConstants", "Schedule", "schedule_thm2", "schedule_thm3", "schedule_clip_nsgdm_baseline",
    "RunTrace", "iterations_to_target",
    "HessClipError", "ContractError", "DomainError", "ConfigurationError",
]
