"""File formats: datasets, model files and result tables."""

from __future__ import annotations

from so3spline.formats.dataset import (
    FORMAT_VERSION,
    Dataset,
    RotationRecord,
    dataset_document,
    load_dataset,
    parse_dataset,
    save_dataset,
)
from so3spline.formats.model_file import (
    MODEL_FORMAT_VERSION,
    ModelDocument,
    dumps_model,
    load_model,
    model_document,
    parse_model,
    save_model,
)
from so3spline.formats.tables import (
    COEFFS_COLUMNS,
    CONVERGENCE_COLUMNS,
    ckc_document,
    coeffs_csv,
    coeffs_rows,
    convergence_csv,
    convergence_document,
    values_document,
    write_ckc_report,
    write_convergence,
    write_values,
)

__all__ = [
    "COEFFS_COLUMNS",
    "CONVERGENCE_COLUMNS",
    "FORMAT_VERSION",
    "MODEL_FORMAT_VERSION",
    "Dataset",
    "ModelDocument",
    "RotationRecord",
    "ckc_document",
    "coeffs_csv",
    "coeffs_rows",
    "convergence_csv",
    "convergence_document",
    "dataset_document",
    "dumps_model",
    "load_dataset",
    "load_model",
    "model_document",
    "parse_dataset",
    "parse_model",
    "save_dataset",
    "save_model",
    "values_document",
    "write_ckc_report",
    "write_convergence",
    "write_values",
]
