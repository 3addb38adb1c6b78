"""CSV and JSON tables: kernel coefficients, convergence studies, CKC reports, values."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from so3spline.kernels.surface_spline import ChebSeries, KernelOrder
from so3spline.localize.approximant import ConvergenceTable
from so3spline.localize.coefficients import CkcReport
from so3spline.rotations.pointsets import PointSet

TABLE_FORMAT_VERSION = 1
COEFFS_COLUMNS = ("ell", "coefficient")
CONVERGENCE_COLUMNS = (
    "n_points",
    "fill",
    "radius",
    "sup_error",
    "l2_error",
    "local_error",
    "stability",
    "coefficient_ratio",
    "refinement_change",
)


def _json_number(value: float) -> float | None:
    return float(value) if math.isfinite(value) else None


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _write(path: Path | str, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# ---------------------------------------------------------------------------
# Kernel coefficients
# ---------------------------------------------------------------------------


def coeffs_rows(order: KernelOrder | int, max_degree: int) -> list[tuple[int, float]]:
    return ChebSeries.compute(order, max_degree).rows()


def coeffs_csv(order: KernelOrder | int, max_degree: int) -> str:
    return _csv_text(COEFFS_COLUMNS, [(ell, repr(v)) for ell, v in coeffs_rows(order, max_degree)])


# ---------------------------------------------------------------------------
# Convergence tables
# ---------------------------------------------------------------------------


def convergence_csv(table: ConvergenceTable) -> str:
    rows = [
        (r.n_points, *(repr(float(getattr(r, name))) for name in CONVERGENCE_COLUMNS[1:]))
        for r in table.rows
    ]
    return _csv_text(CONVERGENCE_COLUMNS, rows)


def convergence_document(table: ConvergenceTable) -> dict[str, Any]:
    return {
        "format_version": TABLE_FORMAT_VERSION,
        "method": table.method,
        "order_sup": _json_number(table.order_sup),
        "order_l2": _json_number(table.order_l2),
        "order_local": _json_number(table.order_local),
        "metadata": table.metadata,
        "rows": [
            {
                "n_points": r.n_points,
                **{name: _json_number(getattr(r, name)) for name in CONVERGENCE_COLUMNS[1:]},
            }
            for r in table.rows
        ],
    }


def write_convergence(table: ConvergenceTable, csv_path: Path | str, json_path: Path | str | None = None) -> None:
    _write(csv_path, convergence_csv(table))
    if json_path is not None:
        _write(json_path, json.dumps(convergence_document(table), indent=2) + "\n")


# ---------------------------------------------------------------------------
# CKC reports and evaluated values
# ---------------------------------------------------------------------------


def ckc_document(report: CkcReport, point_set: PointSet | None = None) -> dict[str, Any]:
    doc = {"format_version": TABLE_FORMAT_VERSION, **report.to_dict()}
    if point_set is not None:
        doc["point_set"] = {
            "count": len(point_set),
            "separation": point_set.separation,
            "fill": point_set.fill,
            "mesh_ratio": point_set.mesh_ratio,
        }
    return doc


def write_ckc_report(report: CkcReport, path: Path | str, point_set: PointSet | None = None) -> None:
    _write(path, json.dumps(ckc_document(report, point_set), indent=2) + "\n")


def values_document(values: Any) -> dict[str, Any]:
    v = np.asarray(values, dtype=complex).reshape(-1)
    return {
        "format_version": TABLE_FORMAT_VERSION,
        "values": [[float(z.real), float(z.imag)] for z in v],
    }


def write_values(values: Any, path: Path | str) -> None:
    _write(path, json.dumps(values_document(values), indent=2) + "\n")
