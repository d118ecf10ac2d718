"""Simulation and exact verification of vertex-reinforced random walk on Z."""

__version__ = "0.1.0"

from .weights import WeightFunction, WeightError  # noqa: E402
from .rng import Rng  # noqa: E402
from .walk import StateError, StepRecord, WalkState, run_walk  # noqa: E402
from .martingale import (  # noqa: E402
    DomainError,
    MartingaleTracker,
    StoppedStateError,
    VerificationError,
    eval_F,
    expected_F_after_update,
    expected_F_next,
    hitting_increment,
    local_gap,
    supermartingale_gap,
)
from .stats import TailCurve, TrajectoryStats, tail_curve  # noqa: E402
from .ensemble import SweepConfig, SweepResult, phase_table, run_cell, run_streams  # noqa: E402

__all__ = [
    "WeightFunction", "WeightError", "Rng", "WalkState", "StepRecord", "StateError", "run_walk",
    "MartingaleTracker", "DomainError", "StoppedStateError", "VerificationError", "eval_F",
    "expected_F_next", "expected_F_after_update", "supermartingale_gap", "local_gap",
    "hitting_increment", "TrajectoryStats", "TailCurve", "tail_curve", "SweepConfig",
    "SweepResult", "phase_table", "run_cell", "run_streams",
]
