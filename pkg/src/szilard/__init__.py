"""N-molecule Szilard engines, ergodic-component entropy and switch thermodynamics."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    CycleReport,
    EngineConfig,
    Model,
    PartitionOutcome,
    StatisticsError,
    TrialStream,
    sample_partition,
    shannon_entropy,
)

__all__ = [
    "CycleReport",
    "EngineConfig",
    "Model",
    "PartitionOutcome",
    "StatisticsError",
    "TrialStream",
    "sample_partition",
    "shannon_entropy",
]
