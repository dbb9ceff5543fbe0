"""minefair: mining fairness of proof-of-work blockchain networks."""

from .fairness import (
    ConvergenceError,
    FairnessReport,
    baseline_fairness,
    model_fairness,
    two_miner_closed_form,
)
from .harness import compare, relative_error, sweep
from .model import ModelConfig, ModelError, NetworkModel, TieBreakRule, build_model
from .simulator import SimConfig, SimResult, SimulationError

__all__ = [
    "ConvergenceError",
    "FairnessReport",
    "ModelConfig",
    "ModelError",
    "NetworkModel",
    "SimConfig",
    "SimResult",
    "SimulationError",
    "TieBreakRule",
    "baseline_fairness",
    "build_model",
    "compare",
    "model_fairness",
    "relative_error",
    "sweep",
    "two_miner_closed_form",
]
