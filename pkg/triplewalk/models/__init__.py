"""
Domain models and configuration schemas
"""
from triplewalk.models.schemas import (
    BlendCoefficients, Direction, EvalTask, GraphKind, PipelineConfig, Stage,
    StageResult, StageStatus, TrainConfig, WalkConfig, WeightingKind,
)
from triplewalk.models.graphs import (
    HomogeneousGraph, KnowledgeGraph, LabeledDataset, PropagationRule, TripleLineGraph,
)

__all__ = [
    "BlendCoefficients",
    "Direction",
    "EvalTask",
    "GraphKind",
    "HomogeneousGraph",
    "KnowledgeGraph",
    "LabeledDataset",
    "PipelineConfig",
    "PropagationRule",
    "Stage",
    "StageResult",
    "StageStatus",
    "TrainConfig",
    "TripleLineGraph",
    "WalkConfig",
    "WeightingKind",
]
