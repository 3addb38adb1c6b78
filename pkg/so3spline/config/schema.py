"""Configuration schema for so3spline."""

from __future__ import annotations

import os
import re
from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from pydantic import BaseModel, Field, field_validator


def _resolve_env_vars(value: Any) -> Any:
    """Resolve ${ENV_VAR} patterns in string values."""
    if isinstance(value, str):
        pattern = re.compile(r"\$\{([^}]+)\}")

        def replacer(match):
            env_var = match.group(1)
            return os.environ.get(env_var, match.group(0))

        return pattern.sub(replacer, value)
    elif isinstance(value, dict):
        return {k: _resolve_env_vars(v) for k, v in value.items()}
    elif isinstance(value, list):
        return [_resolve_env_vars(v) for v in value]
    return value


# ---------------------------------------------------------------------------
# Runtime configuration
# ---------------------------------------------------------------------------


class LoggingConfig(BaseModel):
    level: str = "WARNING"

    @field_validator("level")
    @classmethod
    def _upper(cls, v: str) -> str:
        return v.upper()


class ObservabilityConfig(BaseModel):
    enabled: bool = False
    service_name: str = "so3spline"
    otlp_endpoint: str = ""


# ---------------------------------------------------------------------------
# Numerical configuration
# ---------------------------------------------------------------------------


class GeometryConfig(BaseModel):
    probe_factor: int = 20
    refine_probes: int = 8
    pool_factor: int = 8
    max_mesh_ratio: float = 2.5
    duplicate_tolerance: float = 1e-9


class KernelConfig(BaseModel):
    order: int = 2

    @field_validator("order")
    @classmethod
    def _order_at_least_two(cls, v: int) -> int:
        if v < 2:
            raise ValueError(f"kernel order must be >= 2, got {v}")
        return v


class FitConfig(BaseModel):
    condition_limit: float = 1e14
    rank_tolerance: float = 1e-10
    tikhonov_orientation: Literal["native", "literal"] = "native"
    lsq_center_fraction: float = Field(default=0.25, gt=0, le=1)


class LocalizeConfig(BaseModel):
    precision: int = 4
    radius_constant: Optional[float] = None  # None = calibrate on the reference set
    radius_candidates: list[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0])
    rank_cutoff: float = 1e-10
    probe_count: int = 100
    workers: int = 1
    chunk_size: int = 256


class ConvergenceConfig(BaseModel):
    levels: int = 3
    base_count: int = 250
    growth: float = 8.0
    quadrature_degree: int = 16
    max_refinements: int = 3
    probe_count: int = 500
    test_function: str = "character:2"


# ---------------------------------------------------------------------------
# Root configuration
# ---------------------------------------------------------------------------


class So3SplineConfig(BaseModel):
    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    observability: ObservabilityConfig = Field(default_factory=ObservabilityConfig)
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    fit: FitConfig = Field(default_factory=FitConfig)
    localize: LocalizeConfig = Field(default_factory=LocalizeConfig)
    convergence: ConvergenceConfig = Field(default_factory=ConvergenceConfig)
    seed: int = 0

    @classmethod
    def load(cls, path: Path | None = None) -> "So3SplineConfig":
        """Load configuration from YAML file with env var resolution."""
        if path is None:
            path = Path.home() / ".so3spline" / "config.yaml"

        if not path.exists():
            return cls()

        with open(path) as f:
            raw = yaml.safe_load(f) or {}

        resolved = _resolve_env_vars(raw)
        return cls.model_validate(resolved)

    def save(self, path: Path | None = None) -> None:
        """Save configuration to YAML file."""
        if path is None:
            path = Path.home() / ".so3spline" / "config.yaml"

        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            yaml.dump(
                self.model_dump(exclude_defaults=False),
                f,
                default_flow_style=False,
                sort_keys=False,
            )
