""" Triplewalk - Command-line entry point """

import argparse
import sys
from typing import List, Optional

from loguru import logger

from triplewalk import __version__
from triplewalk.commands import COMMANDS, build_pipeline_config
from triplewalk.config import configure_logging, settings
from triplewalk.errors import ConfigError, TriplewalkError
from triplewalk.models.schemas import EvalTask, GraphKind, StageStatus, WeightingKind


def _common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)

    io = parent.add_argument_group("input and output")
    io.add_argument("--input", help="triple file (kg) or edge list (homogeneous)")
    io.add_argument("--kind", choices=[k.value for k in GraphKind], help="input graph kind")
    io.add_argument("--out", help="artifact directory (default: out)")
    io.add_argument("--config", help="`key = value` config file; flags take precedence")
    io.add_argument("--resume", action="store_true", default=None,
                    help="skip stages whose artifact already exists")
    io.add_argument("--dataset", help="dataset name in metrics (default: input file stem)")

    weights = parent.add_argument_group("weighting")
    weights.add_argument("--weighting", choices=[w.value for w in WeightingKind])
    weights.add_argument("--alpha", type=float)
    weights.add_argument("--beta", type=float)
    weights.add_argument("--gamma", type=float)

    walk = parent.add_argument_group("walks and training")
    walk.add_argument("--walks", type=int, help="walks per line node (default 10)")
    walk.add_argument("--walk-length", type=int, help="maximum walk length (default 100)")
    walk.add_argument("--window", type=int, help="context window (default 10)")
    walk.add_argument("--dim", type=int, help="embedding dimension (default 128 kg, 32 homogeneous)")
    walk.add_argument("--negatives", type=int, help="negative samples (default 10)")
    walk.add_argument("--epochs", type=int, help="training epochs (default 5)")
    walk.add_argument("--learning-rate", type=float, help="initial learning rate (default 0.025)")
    walk.add_argument("--seed", type=int, help="seed for walks, training and evaluation")
    walk.add_argument("--threads", type=int, help="workers; 1 is deterministic (env TRIPLEWALK_THREADS)")

    evaluation = parent.add_argument_group("evaluation")
    evaluation.add_argument("--task", choices=[t.value for t in EvalTask])
    evaluation.add_argument("--labels", help="`node<TAB>label` file")
    evaluation.add_argument("--rules", help="`predicate<TAB>s2o|o2s` propagation rules")
    evaluation.add_argument("--train-fraction", help="training fraction or comma-separated list")
    evaluation.add_argument("--runs", type=int, help="repetitions per measurement (default 10)")
    evaluation.add_argument("--k", type=int, help="clusters (default: number of classes)")

    parent.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="triplewalk", description="Triple line graph embeddings")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    parent = _common_options()
    for command in COMMANDS.values():
        subparsers.add_parser(command.name, parents=[parent], help=command.help)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        settings.log_level = args.log_level.upper()
    configure_logging()

    command = COMMANDS[args.command]
    try:
        cfg = build_pipeline_config(vars(args), args.config, command.overrides)
        results = command(cfg)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return 2
    except TriplewalkError as e:
        logger.error(str(e))
        return 1
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        return 1

    for result in results:
        if result.status != StageStatus.SKIPPED:
            logger.info(f"{result.stage.value}: {result.status.value} in {result.duration_ms}ms "
                        f"-> {', '.join(result.artifacts)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
