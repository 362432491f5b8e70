"""
Config File Command Helpers - `key = value` files merged with command-line flags
"""
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from pydantic import ValidationError

from triplewalk.errors import ConfigError
from triplewalk.models.schemas import PipelineConfig

# flat option name -> (section, field) in PipelineConfig
_NESTED = {
    "alpha": ("blend", "alpha"),
    "beta": ("blend", "beta"),
    "gamma": ("blend", "gamma"),
    "walks": ("walk", "walks_per_node"),
    "walk_length": ("walk", "max_length"),
    "window": ("train", "window"),
    "dim": ("train", "dimension"),
    "negatives": ("train", "negatives"),
    "epochs": ("train", "epochs"),
    "learning_rate": ("train", "learning_rate"),
}

_TOP_LEVEL = {
    "input", "kind", "weighting", "task", "labels", "rules", "out", "threads",
    "runs", "k", "dataset", "resume",
}

OPTION_KEYS = frozenset(_NESTED) | _TOP_LEVEL | {"seed", "train_fraction"}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def normalize_key(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_")


def parse_config_file(path: Path) -> Dict[str, str]:
    """Read `key = value` lines; `#` starts a comment"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    values: Dict[str, str] = {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected `key = value`")
        key, value = (part.strip() for part in line.split("=", 1))
        key = normalize_key(key)
        if key not in OPTION_KEYS:
            raise ConfigError(f"{path}:{number}: unknown config key '{key}'")
        values[key] = value
    return values


def parse_fractions(value: Any) -> List[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    try:
        return [float(part) for part in str(value).split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"train fraction must be a number or comma-separated list, got '{value}'") from None


def _parse_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise ConfigError(f"expected a boolean, got '{value}'")


def build_pipeline_config(flags: Mapping[str, Any], config_file: Optional[Path] = None,
                          overrides: Optional[Mapping[str, Any]] = None) -> PipelineConfig:
    """Merge defaults < config file < flags < command overrides into a PipelineConfig"""
    merged: Dict[str, Any] = dict(parse_config_file(config_file)) if config_file else {}
    merged.update({k: v for k, v in flags.items() if k in OPTION_KEYS and v is not None})
    merged.update(overrides or {})

    data: Dict[str, Any] = {"blend": {}, "walk": {}, "train": {}}
    for key, value in merged.items():
        if key in _NESTED:
            section, name = _NESTED[key]
            data[section][name] = value
        elif key == "seed":
            data["walk"]["seed"] = value
            data["train"]["seed"] = value
        elif key == "train_fraction":
            data["train_fractions"] = parse_fractions(value)
        elif key == "resume":
            data["resume"] = _parse_bool(value)
        else:
            data[key] = value

    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as e:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid configuration: {details}") from None
