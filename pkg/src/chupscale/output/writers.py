"""Text encoders for the artifacts written by :class:`~chupscale.output.OutputSink`.

Floats are written with :func:`repr`, which round-trips exactly and makes
reruns byte-identical.
"""

from __future__ import annotations

import csv
import io
from typing import Any, Iterable, Sequence

import numpy as np
import numpy.typing as npt

from ..cell_solver import EffectiveTensors


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def format_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            msg = f"row has {len(row)} entries, expected {len(columns)}"
            raise ValueError(msg)
        writer.writerow([_cell(value) for value in row])
    return buffer.getvalue()


def format_field(values: npt.ArrayLike) -> str:
    """Lossless field text: ``d n1 .. nd`` then rows along the last axis."""

    array = np.asarray(values, dtype=float)
    if array.ndim == 0:
        array = array.reshape(1)
    lines = [" ".join(str(size) for size in (array.ndim, *array.shape))]
    for row in array.reshape(-1, array.shape[-1]):
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def parse_field(text: str) -> npt.NDArray[np.float64]:
    """Inverse of :func:`format_field` (header lines starting with ``#`` are skipped)."""

    lines = [line for line in text.splitlines() if line.strip() and not line.startswith("#")]
    header = [int(token) for token in lines[0].split()]
    shape = tuple(header[1 : 1 + header[0]])
    values = [float(token) for line in lines[1:] for token in line.split()]
    return np.array(values, dtype=float).reshape(shape)


def format_vtk(
    values: npt.ArrayLike, spacing: Sequence[float], title: str, name: str = "phi"
) -> str:
    """Legacy-VTK ``STRUCTURED_POINTS`` file with cell-centred samples as point data."""

    array = np.asarray(values, dtype=float)
    if not 1 <= array.ndim <= 3 or len(spacing) != array.ndim:
        msg = "VTK output needs a 1-3 dimensional field with matching spacing"
        raise ValueError(msg)
    dims = list(array.shape) + [1] * (3 - array.ndim)
    steps = [float(h) for h in spacing] + [1.0] * (3 - array.ndim)
    origin = [0.5 * h for h in spacing] + [0.0] * (3 - array.ndim)
    lines = [
        "# vtk DataFile Version 3.0",
        title[:255],
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        "DIMENSIONS " + " ".join(str(d) for d in dims),
        "ORIGIN " + " ".join(repr(o) for o in origin),
        "SPACING " + " ".join(repr(h) for h in steps),
        f"POINT_DATA {array.size}",
        f"SCALARS {name} double 1",
        "LOOKUP_TABLE default",
    ]
    lines.extend(repr(float(v)) for v in array.ravel(order="F"))
    return "\n".join(lines) + "\n"


def _matrix_lines(label: str, matrix: npt.NDArray[np.float64]) -> list[str]:
    lines = [f"{label}:"]
    lines.extend("  " + " ".join(repr(float(v)) for v in row) for row in matrix)
    return lines


def format_tensor_report(tensors: EffectiveTensors) -> str:
    """Human-readable tensor summary at full precision."""

    lines = [
        f"theta1: {tensors.porosity!r}",
        f"mobility: {tensors.mobility!r}",
        f"lambda: {tensors.lam!r}",
        f"Mv form: {tensors.mv_form}",
    ]
    lines += _matrix_lines("D", tensors.diffusion)
    lines += _matrix_lines("Mv", tensors.mv)
    lines += _matrix_lines("Mw_a", tensors.mw_a)
    lines += _matrix_lines("Mw_b", tensors.mw_b)
    return "\n".join(lines) + "\n"
