"""Pipeline configuration: YAML file plus command-line overrides."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .errors import ConfigError
from .retrieval import RetrievalConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PathsConfig:
    corpus: Path | None = None
    queries: Path | None = None
    parses_dir: Path | None = None
    embeddings: Path | None = None
    concept_dump: Path | None = None
    relation_templates: Path | None = None
    label_weights: Path | None = None
    cache_dir: Path = Path("cache")
    output_dir: Path = Path("out")


@dataclass(frozen=True)
class GatewayConfig:
    endpoint: str | None = None
    model: str = "gpt-4o-mini"
    temperature: float = 0.0
    retry_limit: int = 3
    backoff_base: float = 0.5
    max_in_flight: int = 4
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    mock_script: Path | None = None


@dataclass(frozen=True)
class PipelineConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    gateway: GatewayConfig = field(default_factory=GatewayConfig)


_PATH_FIELDS = {f.name for f in fields(PathsConfig)}
_RETRIEVAL_FIELDS = {f.name for f in fields(RetrievalConfig)}
_GATEWAY_FIELDS = {f.name for f in fields(GatewayConfig)}
_GATEWAY_PATHS = {"mock_script"}


def _section(raw: dict, name: str, known: set[str]) -> dict:
    section = raw.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown keys in config section {name!r}: {sorted(unknown)}")
    return section


def _as_path(base: Path, value) -> Path | None:
    if value is None:
        return None
    path = Path(str(value))
    return path if path.is_absolute() else base / path


def load_config(path: str | Path) -> PipelineConfig:
    """Parse a YAML config. Relative paths resolve against the file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text("utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping")
    unknown = set(raw) - {"paths", "retrieval", "gateway"}
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    base = path.parent

    paths_raw = _section(raw, "paths", _PATH_FIELDS)
    paths_kwargs = {}
    for name in _PATH_FIELDS:
        if name in paths_raw:
            resolved = _as_path(base, paths_raw[name])
            if resolved is not None:
                paths_kwargs[name] = resolved
    paths = PathsConfig(**paths_kwargs)

    retrieval_raw = _section(raw, "retrieval", _RETRIEVAL_FIELDS)
    try:
        retrieval = RetrievalConfig(**retrieval_raw)
    except TypeError as exc:
        raise ConfigError(f"bad retrieval config: {exc}") from exc

    gateway_raw = dict(_section(raw, "gateway", _GATEWAY_FIELDS))
    for name in _GATEWAY_PATHS:
        if name in gateway_raw:
            gateway_raw[name] = _as_path(base, gateway_raw[name])
    try:
        gateway = GatewayConfig(**gateway_raw)
    except TypeError as exc:
        raise ConfigError(f"bad gateway config: {exc}") from exc

    return PipelineConfig(paths=paths, retrieval=retrieval, gateway=gateway)


def apply_overrides(config: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Apply flat CLI overrides like {'k_top': 3, 'model': '...'}."""
    retrieval_kwargs = {}
    gateway_kwargs = {}
    paths_kwargs = {}
    for name, value in overrides.items():
        if value is None:
            continue
        if name in _RETRIEVAL_FIELDS:
            retrieval_kwargs[name] = value
        elif name in _GATEWAY_FIELDS:
            gateway_kwargs[name] = Path(value) if name in _GATEWAY_PATHS else value
        elif name in _PATH_FIELDS:
            paths_kwargs[name] = Path(value)
        else:
            raise ConfigError(f"unknown config override {name!r}")
    if retrieval_kwargs:
        config = replace(config, retrieval=replace(config.retrieval, **retrieval_kwargs))
    if gateway_kwargs:
        config = replace(config, gateway=replace(config.gateway, **gateway_kwargs))
    if paths_kwargs:
        config = replace(config, paths=replace(config.paths, **paths_kwargs))
    return config


def require_paths(config: PipelineConfig, *names: str) -> None:
    """Error out unless the named inputs are configured and exist."""
    for name in names:
        value = getattr(config.paths, name)
        if value is None:
            raise ConfigError(f"config is missing required path {name!r}")
        if not Path(value).exists():
            raise ConfigError(f"configured {name} path {value} does not exist")
