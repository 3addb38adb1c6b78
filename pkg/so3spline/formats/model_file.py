"""Model files: fitted spline models as versioned JSON.

Centers are stored as rotation matrices and complex numbers as [re, im]
pairs, so save -> load -> save reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from so3spline.errors import ParseError, RotationValidationError
from so3spline.fit.model import ORDERING_TAG, SplineModel
from so3spline.kernels.surface_spline import KernelOrder
from so3spline.rotations.group import ORTHOGONALITY_TOLERANCE
from so3spline.wigner.dfunctions import wigner_indices

MODEL_FORMAT_VERSION = 1

Matrix = tuple[
    tuple[float, float, float],
    tuple[float, float, float],
    tuple[float, float, float],
]


class CenterRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    matrix: Matrix


class BetaEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    index: tuple[int, int, int]
    value: tuple[float, float]


class ModelDocument(BaseModel):
    """On-disk schema of a SplineModel."""

    model_config = ConfigDict(extra="forbid")

    format_version: int
    order: int = Field(ge=2)
    l0: int
    ordering: str
    centers: list[CenterRecord] = Field(min_length=1)
    alpha: list[tuple[float, float]]
    beta: list[BetaEntry]
    info: dict[str, Any] = Field(default_factory=dict)


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _portable_info(info: Any) -> dict[str, Any]:
    """Keep scalar diagnostics that JSON represents exactly."""
    out: dict[str, Any] = {}
    for key, value in dict(info).items():
        if isinstance(value, (bool, str)):
            out[str(key)] = value
        elif isinstance(value, (int, np.integer)):
            out[str(key)] = int(value)
        elif isinstance(value, (float, np.floating)) and math.isfinite(value):
            out[str(key)] = float(value)
    return out


def model_document(model: SplineModel) -> dict[str, Any]:
    indices = wigner_indices(model.polynomial_degree)
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "order": model.order.m,
        "l0": model.polynomial_degree,
        "ordering": model.ordering,
        "centers": [{"matrix": [[float(v) for v in row] for row in m]} for m in model.centers],
        "alpha": [_pair(a) for a in model.alpha],
        "beta": [
            {"index": [int(v) for v in idx], "value": _pair(b)}
            for idx, b in zip(indices, model.beta)
        ],
        "info": _portable_info(model.info),
    }


def dumps_model(model: SplineModel) -> str:
    return json.dumps(model_document(model), indent=2, allow_nan=False) + "\n"


def save_model(model: SplineModel, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_model(model))
    logger.debug(f"Saved model with {len(model)} centers to {path}")


def _check_document(doc: ModelDocument) -> None:
    if doc.format_version != MODEL_FORMAT_VERSION:
        raise ParseError(f"Unsupported model format_version {doc.format_version}")
    if doc.ordering != ORDERING_TAG:
        raise ParseError(f"Unsupported coefficient ordering {doc.ordering!r} (expected {ORDERING_TAG!r})")
    if doc.l0 != doc.order - 2:
        raise ParseError(f"l0 = {doc.l0} does not match order m = {doc.order} (expected {doc.order - 2})")
    if len(doc.alpha) != len(doc.centers):
        raise ParseError(f"{len(doc.alpha)} alpha entries for {len(doc.centers)} centers")
    expected = [tuple(int(v) for v in idx) for idx in wigner_indices(doc.l0)]
    if len(doc.beta) != len(expected):
        raise ParseError(f"beta must have {len(expected)} entries for l0 = {doc.l0}")
    for k, (entry, idx) in enumerate(zip(doc.beta, expected)):
        if entry.index != idx:
            raise ParseError(f"beta index {entry.index} out of order (expected {idx})", record=k)


def parse_model(raw: Any, tolerance: float = ORTHOGONALITY_TOLERANCE) -> SplineModel:
    try:
        doc = ModelDocument.model_validate(raw)
    except ValidationError as exc:
        err = exc.errors()[0]
        where = ".".join(str(p) for p in err.get("loc", ()))
        raise ParseError(f"Malformed model file at {where}: {err.get('msg', 'invalid')}") from exc
    _check_document(doc)

    centers = np.array([c.matrix for c in doc.centers], dtype=float)
    deviation = np.abs(np.swapaxes(centers, 1, 2) @ centers - np.eye(3)).max(axis=(1, 2))
    bad = np.flatnonzero((deviation > tolerance) | (np.linalg.det(centers) <= 0))
    if bad.size:
        raise RotationValidationError(f"Center {int(bad[0])} is not a rotation matrix")

    alpha = np.array([complex(re, im) for re, im in doc.alpha], dtype=complex)
    beta = np.array([complex(*e.value) for e in doc.beta], dtype=complex)
    return SplineModel(KernelOrder(doc.order), centers, alpha, beta, info=doc.info)


def load_model(path: Path | str) -> SplineModel:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ParseError(f"Model file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    model = parse_model(raw)
    logger.debug(f"Loaded model m={model.order.m} with {len(model)} centers from {path}")
    return model
