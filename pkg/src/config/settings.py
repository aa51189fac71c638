"""
Settings - Run configuration for the analyzer
YAML config file, RSP_* environment variables and CLI overrides
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Type

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from src.optimizer.decoding_optimizer import OptimizerConfig
from src.protocol.great_circle import QuadratureSpec
from src.utils.errors import InputError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path("config/config.yaml")
DEFAULT_ENV_FILE = Path("config/rsp.env")


class LoggingSettings(BaseModel):
    level: str = "INFO"
    log_file: Optional[str] = None


class RSPSettings(BaseSettings):
    """
    Analyzer settings.

    Precedence: CLI overrides > config file > RSP_* environment > defaults.
    """

    model_config = SettingsConfigDict(env_prefix="RSP_", env_nested_delimiter="__", extra="ignore")

    starts: int = Field(default=16, ge=1)
    max_iter: int = Field(default=400, ge=1)
    simplex_tol: float = Field(default=1e-9, gt=0)
    param_tol: float = Field(default=1e-6, gt=0)
    quad_points: int = Field(default=256, ge=8)
    quad_tol: float = Field(default=1e-10, gt=0)
    quad_refine: bool = False
    beta_samples: int = Field(default=200, ge=8)
    seed: int = Field(default=42, ge=0)
    tol_closed_form: float = Field(default=5e-3, gt=0)
    threads: int = Field(default=1, ge=1)
    logging: LoggingSettings = LoggingSettings()

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # init kwargs carry CLI overrides merged over the config file
        return init_settings, env_settings

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(n_points=self.quad_points, refine=self.quad_refine, tol=self.quad_tol)

    def optimizer_config(self) -> OptimizerConfig:
        """Numerical option bundle handed to the optimizer."""
        return OptimizerConfig(
            starts=self.starts,
            max_iter=self.max_iter,
            simplex_tol=self.simplex_tol,
            param_tol=self.param_tol,
            quad=self.quadrature(),
            beta_samples=self.beta_samples,
            seed=self.seed,
            threads=self.threads,
            tol_closed_form=self.tol_closed_form,
        )


def resolve_config_path(config_path: Optional[str] = None) -> Optional[Path]:
    """--config, then RSP_CONFIG, then config/config.yaml when present."""
    if config_path:
        return Path(config_path)
    env_path = os.getenv("RSP_CONFIG")
    if env_path:
        return Path(env_path)
    if DEFAULT_CONFIG_PATH.exists():
        return DEFAULT_CONFIG_PATH
    return None


def load_config_file(path: Path) -> Dict[str, Any]:
    """
    Read a YAML (or JSON) config file.

    Raises:
        InputError: if the file is missing or not a mapping
    """
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f) or {}
    except FileNotFoundError as e:
        raise InputError(f"Config file not found: {path}") from e
    except yaml.YAMLError as e:
        raise InputError(f"Config file {path} is not valid YAML: {e}") from e

    if not isinstance(data, dict):
        raise InputError(f"Config file {path} must contain a mapping")
    return data


def load_settings(
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> RSPSettings:
    """
    Assemble settings from every source.

    Args:
        config_path: Explicit config file (--config)
        overrides: CLI values; None entries are ignored

    Returns:
        Validated RSPSettings

    Raises:
        InputError: on unreadable files or invalid values
    """
    if DEFAULT_ENV_FILE.exists():
        load_dotenv(DEFAULT_ENV_FILE)

    values: Dict[str, Any] = {}
    path = resolve_config_path(config_path)
    if path is not None:
        values.update(load_config_file(path))
        logger.debug(f"Loaded config from {path}")

    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    try:
        return RSPSettings(**values)
    except ValueError as e:
        raise InputError(f"Invalid configuration: {e}") from e
