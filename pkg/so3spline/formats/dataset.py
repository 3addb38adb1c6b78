"""Dataset files: JSON records of rotations with optional real or complex values."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from so3spline.errors import (
    DegenerateSetError,
    InvalidArgumentError,
    ParseError,
    RotationValidationError,
)
from so3spline.rotations.group import (
    ORTHOGONALITY_TOLERANCE,
    EulerAngles,
    Rotation,
    as_matrices,
    from_euler,
    matrices_to_euler,
    matrices_to_quaternions,
    quaternions_to_matrices,
)
from so3spline.rotations.pointsets import DUPLICATE_TOLERANCE, closest_pair

FORMAT_VERSION = 1
ENCODINGS = ("quaternion", "euler", "matrix")


class RotationRecord(BaseModel):
    """One record: exactly one rotation encoding plus an optional value."""

    model_config = ConfigDict(extra="forbid")

    euler: Optional[tuple[float, float, float]] = None
    quaternion: Optional[tuple[float, float, float, float]] = None
    matrix: Optional[tuple[
        tuple[float, float, float],
        tuple[float, float, float],
        tuple[float, float, float],
    ]] = None
    value: Optional[Union[float, tuple[float, float]]] = None

    @model_validator(mode="after")
    def _one_encoding(self) -> "RotationRecord":
        given = [name for name in ENCODINGS if getattr(self, name) is not None]
        if len(given) != 1:
            raise ValueError(
                f"exactly one of euler, quaternion, matrix is required (got {given or 'none'})"
            )
        return self

    def to_matrix(self, tolerance: float = ORTHOGONALITY_TOLERANCE) -> np.ndarray:
        if self.euler is not None:
            if not all(math.isfinite(v) for v in self.euler):
                raise RotationValidationError("Euler angles must be finite")
            angles = EulerAngles.reduced(*self.euler)
            if not 0.0 <= self.euler[1] <= math.pi:
                logger.debug(f"Reduced Euler angles {self.euler} to {angles.as_tuple()}")
            return from_euler(angles).matrix
        if self.quaternion is not None:
            q = np.asarray(self.quaternion, dtype=float)
            norm = float(np.linalg.norm(q))
            if not math.isfinite(norm) or abs(norm - 1.0) > tolerance:
                raise RotationValidationError(f"Quaternion is not a unit vector (norm {norm:.12g})")
            return quaternions_to_matrices((q / norm)[None, :])[0]
        return Rotation.from_matrix(self.matrix, tolerance).matrix

    def complex_value(self) -> complex | None:
        if self.value is None:
            return None
        if isinstance(self.value, tuple):
            return complex(self.value[0], self.value[1])
        return complex(self.value)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rotations (N, 3, 3) with complex values, or without values for evaluation points."""

    matrices: np.ndarray = field(repr=False)
    values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        m = np.array(as_matrices(self.matrices), dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)
        if self.values is not None:
            v = np.array(self.values, dtype=complex).reshape(-1)
            if v.shape[0] != m.shape[0]:
                raise InvalidArgumentError(f"{v.shape[0]} values for {m.shape[0]} rotations")
            v.setflags(write=False)
            object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.matrices.shape[0]

    @property
    def has_values(self) -> bool:
        return self.values is not None

    @property
    def is_real(self) -> bool:
        return self.values is None or bool(np.all(self.values.imag == 0))

    def rotations(self) -> list[Rotation]:
        return [Rotation(m) for m in self.matrices]


def _records(raw: Any) -> list[Any]:
    if isinstance(raw, list):
        return raw
    if isinstance(raw, dict):
        version = raw.get("format_version", FORMAT_VERSION)
        if version != FORMAT_VERSION:
            raise ParseError(f"Unsupported dataset format_version {version!r}")
        records = raw.get("records")
        if isinstance(records, list):
            return records
    raise ParseError("Dataset must be a list of records or an object with a 'records' list")


def _first_error(exc: ValidationError) -> str:
    err = exc.errors()[0]
    where = ".".join(str(p) for p in err.get("loc", ())) or "record"
    return f"{where}: {err.get('msg', 'invalid')}"


def parse_dataset(
    raw: Any,
    require_values: bool = True,
    tolerance: float = ORTHOGONALITY_TOLERANCE,
    duplicate_tolerance: float = DUPLICATE_TOLERANCE,
) -> Dataset:
    """Validate decoded JSON into a Dataset, naming the failing record."""
    records = _records(raw)
    if not records:
        raise ParseError("Dataset has no records")

    matrices = np.empty((len(records), 3, 3))
    values: list[complex | None] = []
    for i, item in enumerate(records):
        try:
            record = RotationRecord.model_validate(item)
        except ValidationError as exc:
            raise ParseError(f"Malformed record: {_first_error(exc)}", record=i) from exc
        try:
            matrices[i] = record.to_matrix(tolerance)
        except InvalidArgumentError as exc:
            raise RotationValidationError(f"Record {i}: {exc}") from exc
        values.append(record.complex_value())

    missing = [i for i, v in enumerate(values) if v is None]
    if require_values and missing:
        raise ParseError("Record has no value", record=missing[0])
    if missing and len(missing) != len(values):
        raise ParseError("Either every record or no record carries a value", record=missing[0])

    if len(records) > 1:
        d_min, i, j = closest_pair(matrices_to_quaternions(matrices))
        if d_min <= duplicate_tolerance:
            raise DegenerateSetError(
                f"Records {i} and {j} are the same rotation (distance {d_min:.3e})",
                indices=(i, j),
            )

    data = Dataset(matrices, None if missing else np.asarray(values, dtype=complex))
    logger.debug(f"Parsed dataset with {len(data)} records (values: {data.has_values})")
    return data


def load_dataset(path: Path | str, require_values: bool = True, **kwargs: Any) -> Dataset:
    """Read and validate a dataset file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ParseError(f"Dataset file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    return parse_dataset(raw, require_values=require_values, **kwargs)


def _encode_rotation(matrix: np.ndarray, encoding: str) -> dict[str, Any]:
    if encoding == "matrix":
        return {"matrix": [[float(v) for v in row] for row in matrix]}
    if encoding == "quaternion":
        return {"quaternion": [float(v) for v in matrices_to_quaternions(matrix)]}
    return {"euler": [float(v) for v in matrices_to_euler(matrix)]}


def encode_value(value: complex, real: bool) -> float | list[float]:
    return float(value.real) if real else [float(value.real), float(value.imag)]


def dataset_document(dataset: Dataset, encoding: str = "quaternion") -> dict[str, Any]:
    if encoding not in ENCODINGS:
        raise InvalidArgumentError(f"Unknown encoding: {encoding}. Supported: {', '.join(ENCODINGS)}")
    records = []
    for k, m in enumerate(dataset.matrices):
        record = _encode_rotation(m, encoding)
        if dataset.values is not None:
            record["value"] = encode_value(complex(dataset.values[k]), dataset.is_real)
        records.append(record)
    return {"format_version": FORMAT_VERSION, "records": records}


def save_dataset(dataset: Dataset, path: Path | str, encoding: str = "quaternion") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(dataset_document(dataset, encoding), indent=2) + "\n")
