"""
Pydantic schemas for pipeline configuration and stage results
"""
from enum import Enum
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from triplewalk.config import settings

SIMPLEX_TOLERANCE = 1e-12


class GraphKind(str, Enum):
    KG = "kg"
    HOMOGENEOUS = "homogeneous"


class WeightingKind(str, Enum):
    RELATEDNESS = "relatedness"
    CENTRALITY = "centrality"
    UNIFORM = "uniform"


class EvalTask(str, Enum):
    CLASSIFY = "classify"
    CLUSTER = "cluster"
    BOTH = "both"
    NONE = "none"


class Direction(str, Enum):
    SUBJECT_TO_OBJECT = "s2o"
    OBJECT_TO_SUBJECT = "o2s"


class Stage(str, Enum):
    BUILD_LINE_GRAPH = "build-line-graph"
    WEIGH = "weigh"
    WALK = "walk"
    EMBED = "embed"
    EVALUATE = "evaluate"


class StageStatus(str, Enum):
    SUCCESS = "success"
    FAILED = "failed"
    SKIPPED = "skipped"


class BlendCoefficients(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=0.25, ge=0.0, description="Weight of the first outer endpoint")
    beta: float = Field(default=0.5, ge=0.0, description="Weight of the shared endpoint")
    gamma: float = Field(default=0.25, ge=0.0, description="Weight of the second outer endpoint")

    @model_validator(mode="after")
    def check_simplex(self) -> "BlendCoefficients":
        total = self.alpha + self.beta + self.gamma
        if abs(total - 1.0) > SIMPLEX_TOLERANCE:
            raise ValueError(f"alpha + beta + gamma must equal 1, got {total!r}")
        return self


class WalkConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    walks_per_node: int = Field(default=10, ge=1, description="Walks started from every line node")
    max_length: int = Field(default=100, ge=1, description="Maximum walk length in nodes")
    seed: int = Field(default=0, ge=0, lt=2**64)


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dimension: Optional[int] = Field(default=None, ge=1, description="None resolves per graph kind")
    window: int = Field(default=10, ge=1)
    negatives: int = Field(default=10, ge=1)
    epochs: int = Field(default=5, ge=1)
    learning_rate: float = Field(default=0.025, gt=0.0)
    seed: int = Field(default=0, ge=0, lt=2**64)
    threads: int = Field(default=1, ge=1, description="1 = deterministic single worker")

    def resolved(self, kind: GraphKind) -> "TrainConfig":
        if self.dimension is not None:
            return self
        return self.model_copy(update={"dimension": 128 if kind == GraphKind.KG else 32})


DEFAULT_TRAIN_FRACTIONS = [round(0.1 * i, 1) for i in range(1, 10)]


class PipelineConfig(BaseModel):
    input: Path
    kind: GraphKind
    weighting: Optional[WeightingKind] = None
    blend: BlendCoefficients = Field(default_factory=BlendCoefficients)
    walk: WalkConfig = Field(default_factory=WalkConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    task: EvalTask = EvalTask.BOTH
    labels: Optional[Path] = None
    rules: Optional[Path] = None
    train_fractions: List[float] = Field(default_factory=lambda: list(DEFAULT_TRAIN_FRACTIONS))
    runs: int = Field(default=10, ge=1)
    k: Optional[int] = Field(default=None, ge=1)
    out: Path = Path("out")
    threads: Optional[int] = Field(default=None, ge=1, description="None falls back to TRIPLEWALK_THREADS")
    dataset: Optional[str] = None
    resume: bool = False

    @field_validator("train_fractions")
    @classmethod
    def check_fractions(cls, fractions: List[float]) -> List[float]:
        if not fractions:
            raise ValueError("at least one train fraction is required")
        for fraction in fractions:
            if not 0.0 < fraction < 1.0:
                raise ValueError(f"train fraction must lie in (0, 1), got {fraction}")
        return fractions

    @model_validator(mode="after")
    def check_compatibility(self) -> "PipelineConfig":
        if self.weighting is None:
            self.weighting = WeightingKind.RELATEDNESS if self.kind == GraphKind.KG else WeightingKind.CENTRALITY
        if self.weighting == WeightingKind.RELATEDNESS and self.kind != GraphKind.KG:
            raise ValueError("relatedness weighting requires a knowledge graph input (--kind kg)")
        if self.weighting == WeightingKind.CENTRALITY and self.kind != GraphKind.HOMOGENEOUS:
            raise ValueError("centrality weighting requires a homogeneous graph input (--kind homogeneous)")
        if self.threads is None:
            self.threads = settings.threads
        if self.train.threads != self.threads:
            self.train = self.train.model_copy(update={"threads": self.threads})
        return self

    @property
    def dataset_name(self) -> str:
        return self.dataset or self.input.stem


class StageResult(BaseModel):
    stage: Stage
    status: StageStatus
    duration_ms: int = 0
    rss_mb: Optional[float] = None
    artifacts: List[str] = Field(default_factory=list)
    error_message: Optional[str] = None
