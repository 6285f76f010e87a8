"""Output backends for chupscale (CSV, field text, legacy VTK, tensor reports)."""

from .sink import ARTIFACT_VERSION, OutputSink, ProducedFile
from .writers import format_csv, format_field, format_tensor_report, format_vtk, parse_field

__all__ = [
    "ARTIFACT_VERSION",
    "OutputSink",
    "ProducedFile",
    "format_csv",
    "format_field",
    "format_tensor_report",
    "format_vtk",
    "parse_field",
]
