"""
Loading, overriding and echoing run configurations.

Configs are YAML documents validated into RunConfig. Every problem is
reported as a ConfigError naming the dotted key and, when the key appears
in the source file, its line.
"""

import copy
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

import yaml
from pydantic import ValidationError

from wigner_solver.errors import ConfigError, OutputError
from wigner_solver.models.schemas import RunConfig

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).resolve().parent.parent / "presets"
MANIFEST_NAME = "manifest.yaml"


def available_presets() -> List[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))


def preset_path(name: str) -> Path:
    path = PRESET_DIR / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"unknown preset '{name}' (available: {', '.join(available_presets())})", key="preset")
    return path


def _key_lines(node: yaml.Node, prefix: str = "", lines: Optional[Dict[str, int]] = None) -> Dict[str, int]:
    """Dotted key -> 1-based line of every mapping key in a composed YAML tree."""
    lines = {} if lines is None else lines
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            key = f"{prefix}{key_node.value}"
            lines[key] = key_node.start_mark.line + 1
            _key_lines(value_node, f"{key}.", lines)
    elif isinstance(node, yaml.SequenceNode):
        for index, item in enumerate(node.value):
            _key_lines(item, f"{prefix}{index}.", lines)
    return lines


def _parse(text: str, source: str) -> Tuple[Dict[str, Any], Dict[str, int]]:
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML in {source}: {exc}", line=mark.line + 1 if mark else None) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source} must contain a mapping at the top level")
    return data, _key_lines(root) if root is not None else {}


def apply_overrides(data: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """
    Apply `dotted.key=value` overrides; values are parsed as YAML scalars
    or flow collections.
    """
    data = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value", key="--override")
        dotted, raw = item.split("=", 1)
        parts = [p for p in dotted.strip().split(".") if p]
        if not parts:
            raise ConfigError(f"override '{item}' has an empty key", key="--override")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse value '{raw}': {exc}", key=dotted) from exc
        target = data
        for part in parts[:-1]:
            child = target.get(part)
            if child is None:
                child = target[part] = {}
            if not isinstance(child, dict):
                raise ConfigError("cannot override inside a non-mapping value", key=dotted)
            target = child
        target[parts[-1]] = value
    return data


def _validation_to_config_error(exc: ValidationError, lines: Dict[str, int]) -> ConfigError:
    problems = []
    first_key = None
    for error in exc.errors():
        key = ".".join(str(p) for p in error["loc"]) or None
        if first_key is None:
            first_key = key
        problems.append(f"{key}: {error['msg']}" if key else error["msg"])
    line = None
    if first_key:
        # nearest enclosing key that exists in the source
        parts = first_key.split(".")
        while parts and line is None:
            line = lines.get(".".join(parts))
            parts.pop()
    message = problems[0] if len(problems) == 1 else "; ".join(problems)
    if first_key and message.startswith(f"{first_key}: "):
        message = message[len(first_key) + 2:]
    return ConfigError(message, key=first_key, line=line)


def validate_config(data: Dict[str, Any], lines: Optional[Dict[str, int]] = None) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise _validation_to_config_error(exc, lines or {}) from exc


def load_config(path, overrides: Iterable[str] = ()) -> RunConfig:
    """
    Read and validate a YAML run configuration.

    Args:
        path: YAML file
        overrides: `dotted.key=value` strings applied before validation

    Returns:
        Validated RunConfig with every default applied
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", key="--config") from exc
    data, lines = _parse(text, str(path))
    config = validate_config(apply_overrides(data, overrides), lines)
    logger.debug("loaded config %s (%s)", path, config.name)
    return config


def resolve_config(
    config_path: Optional[str] = None,
    preset: Optional[str] = None,
    overrides: Iterable[str] = (),
) -> RunConfig:
    """Config from a file or a shipped preset, overrides applied."""
    if config_path and preset:
        raise ConfigError("give either --config or --preset, not both", key="--config")
    if not config_path and not preset:
        raise ConfigError("one of --config or --preset is required", key="--config")
    return load_config(config_path or preset_path(preset), overrides)


def manifest_hash(config: RunConfig) -> str:
    """SHA-256 of the canonical JSON form of the resolved config."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False, default_flow_style=None)


def write_manifest(config: RunConfig, out_dir) -> Path:
    """Write the resolved config to <out_dir>/manifest.yaml."""
    out_dir = Path(out_dir)
    path = out_dir / MANIFEST_NAME
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        path.write_text(f"# manifest-hash: {manifest_hash(config)}\n{dump_config(config)}", encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write manifest {path}: {exc}") from exc
    return path
