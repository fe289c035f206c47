"""Pipeline configuration and config-file loading (TOML or JSON)."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class PipelineConfig:
    tile_size: int = 224
    tile_num: int = 24
    logit_scale: float = 20.0
    sigma_one: float = 0.2
    sigma_max: float = 3.0
    kernel_size: int = 11
    context_window: int = 77
    batch_size: int = 8
    use_scoring: bool = True
    allow_overlap: bool = True
    preprocess_prompt: bool = True

    def __post_init__(self):
        if self.tile_size < 4 or self.tile_size % 4 != 0:
            raise ConfigError(f"tile_size must be a positive multiple of 4, got {self.tile_size}")
        if self.tile_num < 1:
            raise ConfigError(f"tile_num must be >= 1, got {self.tile_num}")
        if not (0 < self.sigma_one < self.sigma_max):
            raise ConfigError(
                f"require 0 < sigma_one < sigma_max, got sigma_one={self.sigma_one} sigma_max={self.sigma_max}"
            )
        if self.kernel_size < 3 or self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd and >= 3, got {self.kernel_size}")
        if self.context_window < 2:
            raise ConfigError(f"context_window must be >= 2, got {self.context_window}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.logit_scale > 0:
            raise ConfigError(f"logit_scale must be positive, got {self.logit_scale}")

    def with_overrides(self, **kwargs) -> "PipelineConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self

    @classmethod
    def from_mapping(cls, data) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown pipeline config keys: {sorted(unknown)}")
        return cls(**data)


def load_config_file(path) -> dict:
    """Read a TOML or JSON config file into a plain dict."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON config {path}: {exc}") from None
    else:
        try:
            data = tomllib.loads(raw.decode("utf-8"))
        except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
            raise ConfigError(f"malformed TOML config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a table/object: {path}")
    return data


def pipeline_config_from_file(path) -> PipelineConfig:
    data = load_config_file(path)
    section = data.get("pipeline", data)
    if not isinstance(section, dict):
        raise ConfigError(f"[pipeline] section must be a table: {path}")
    return PipelineConfig.from_mapping(section)
