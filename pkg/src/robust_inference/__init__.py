"""Monte Carlo robustness study of point-valued inference procedures under calibration error."""

__version__ = "0.1.0"

from .harness import ScenarioConfig, SweepResult, run_case, run_sweep  # noqa: E402
from .metrics import DecisionThresholds, MetricRecord  # noqa: E402
from .model import (  # noqa: E402
    HIERARCHICAL,
    PROTOTYPICAL,
    ChainParameters,
    JointDistribution,
    sample_true_model,
    to_joint,
)
from .procedures import PROCEDURES, run_procedures  # noqa: E402

__all__ = [
    "ChainParameters",
    "DecisionThresholds",
    "HIERARCHICAL",
    "JointDistribution",
    "MetricRecord",
    "PROCEDURES",
    "PROTOTYPICAL",
    "ScenarioConfig",
    "SweepResult",
    "run_case",
    "run_procedures",
    "run_sweep",
    "sample_true_model",
    "to_joint",
]
