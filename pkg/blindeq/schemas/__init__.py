from blindeq.schemas.experiment import (
    BlockKind,
    ChannelKind,
    EqualizerKind,
    EqualizerSpec,
    EvaluationSpec,
    ExperimentConfig,
    FiberChannelSpec,
    LinearChannelSpec,
    PaChannelSpec,
    SweepAxis,
    SweepSpec,
    TrainingSpec,
)
from blindeq.schemas.record import ExperimentRecord, PointResult, TracePoint

__all__ = [
    "BlockKind",
    "ChannelKind",
    "EqualizerKind",
    "EqualizerSpec",
    "EvaluationSpec",
    "ExperimentConfig",
    "ExperimentRecord",
    "FiberChannelSpec",
    "LinearChannelSpec",
    "PaChannelSpec",
    "PointResult",
    "SweepAxis",
    "SweepSpec",
    "TracePoint",
]
