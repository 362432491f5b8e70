"""
Pipeline Service - Runs pipeline stages in order with resume support
"""
from typing import List, Optional, Sequence

from loguru import logger

from triplewalk.config import configure_logging
from triplewalk.models.schemas import EvalTask, PipelineConfig, Stage, StageResult, StageStatus
from triplewalk.services.executor import StageExecutor

PIPELINE_STAGES: List[Stage] = [
    Stage.BUILD_LINE_GRAPH,
    Stage.WEIGH,
    Stage.WALK,
    Stage.EMBED,
    Stage.EVALUATE,
]


class PipelineService:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.executor = StageExecutor(cfg)

    def _should_skip(self, stage: Stage) -> bool:
        if self.cfg.resume and self.executor.is_complete(stage):
            logger.info(f"Stage '{stage.value}' skipped: artifact present and --resume set")
            return True
        return False

    def run(self, stages: Optional[Sequence[Stage]] = None) -> List[StageResult]:
        """Execute stages in pipeline order; a failure stops the run and keeps earlier artifacts"""
        selected = set(stages) if stages is not None else set(PIPELINE_STAGES)
        if stages is None and self.cfg.task == EvalTask.NONE:
            selected.discard(Stage.EVALUATE)

        results: List[StageResult] = []
        for stage in PIPELINE_STAGES:
            if stage not in selected:
                continue
            if self._should_skip(stage):
                results.append(StageResult(stage=stage, status=StageStatus.SKIPPED))
                continue
            results.append(self.executor.execute(stage))

        total_ms = sum(r.duration_ms for r in results)
        logger.info(f"Pipeline finished: {len(results)} stage(s) in {total_ms}ms, artifacts in {self.cfg.out}")
        return results


def run_pipeline(cfg: PipelineConfig, stages: Optional[Sequence[Stage]] = None) -> List[StageResult]:
    """Run the whole pipeline, or the given stages, writing artifacts and pipeline.log under cfg.out"""
    cfg.out.mkdir(parents=True, exist_ok=True)
    configure_logging(log_dir=cfg.out)
    logger.info(f"Pipeline config: {cfg.model_dump_json()}")
    return PipelineService(cfg).run(stages)
