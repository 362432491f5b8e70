"""
Stage Commands - Subcommand handlers mapping onto pipeline stages
"""
from typing import Any, Dict, List, Mapping, Optional

from triplewalk.models.schemas import EvalTask, PipelineConfig, Stage, StageResult
from triplewalk.services.pipeline import run_pipeline


class Command:
    """A subcommand: the stages it runs and the options it pins"""

    def __init__(self, name: str, help: str, stages: Optional[List[Stage]] = None,
                 overrides: Optional[Dict[str, Any]] = None):
        self.name = name
        self.help = help
        self.stages = stages
        self.overrides = overrides or {}

    def __call__(self, cfg: PipelineConfig) -> List[StageResult]:
        return run_pipeline(cfg, self.stages)


COMMANDS: Mapping[str, Command] = {
    command.name: command
    for command in [
        Command("run", "Run every stage: line graph, weights, walks, embeddings, evaluation"),
        Command("build-line-graph", "Build the (triple) line graph of the input", [Stage.BUILD_LINE_GRAPH]),
        Command("weigh", "Weight the line graph (relatedness, centrality or uniform)", [Stage.WEIGH]),
        Command("walk", "Generate the random-walk corpus", [Stage.WALK]),
        Command("embed", "Train Skip-gram embeddings on the walk corpus", [Stage.EMBED]),
        Command("eval-classify", "Classify labeled line nodes from their embeddings",
                [Stage.EVALUATE], {"task": EvalTask.CLASSIFY}),
        Command("eval-cluster", "Cluster labeled line nodes and score them with NMI",
                [Stage.EVALUATE], {"task": EvalTask.CLUSTER}),
    ]
}
