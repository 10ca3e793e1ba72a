"""Fixed-confidence best-arm identification in linear bandits (GLUCB)."""

from .core import (
    ConfidenceParams,
    RadiusMode,
    RunState,
    StopReport,
    Termination,
    Trace,
    run_glucb,
    run_static,
)
from .env import Instance, ArmSet, make_rng
from .complexity import LowerBoundResult, solve_hg, sample_lower_bound

__all__ = [
    "ArmSet",
    "ConfidenceParams",
    "Instance",
    "LowerBoundResult",
    "RadiusMode",
    "RunState",
    "StopReport",
    "Termination",
    "Trace",
    "make_rng",
    "run_glucb",
    "run_static",
    "sample_lower_bound",
    "solve_hg",
]

__version__ = "0.1.0"
