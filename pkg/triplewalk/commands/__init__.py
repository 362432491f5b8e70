from triplewalk.commands.config_file import build_pipeline_config, parse_config_file
from triplewalk.commands.stages import COMMANDS, Command

__all__ = ["COMMANDS", "Command", "build_pipeline_config", "parse_config_file"]
