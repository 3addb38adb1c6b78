"""Configuration loading and schema."""

from __future__ import annotations

from pathlib import Path

from so3spline.config.schema import So3SplineConfig

DEFAULTS_PATH = Path(__file__).with_name("defaults.yaml")

__all__ = ["DEFAULTS_PATH", "So3SplineConfig"]
