"""
Exception hierarchy shared by parsers, services and the pipeline
"""
from typing import Optional


class TriplewalkError(Exception):
    """Base class for every error raised by triplewalk"""


class ParseError(TriplewalkError, ValueError):
    """Malformed input file"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class GraphError(TriplewalkError, ValueError):
    """Graph does not satisfy the preconditions of an operation"""


class ConfigError(TriplewalkError, ValueError):
    """Invalid or incompatible configuration"""


class StageError(TriplewalkError):
    """A pipeline stage failed"""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage '{stage}' failed: {message}")


class MissingArtifactError(TriplewalkError, FileNotFoundError):
    """An upstream artifact is missing; names the stage that produces it"""

    def __init__(self, path: str, stage: str):
        self.path = path
        self.stage = stage
        super().__init__(f"missing artifact {path}: run '{stage}' first")


class TrainingError(TriplewalkError):
    """Embedding training produced an invalid state"""
