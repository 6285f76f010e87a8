"""Output directory management with provenance headers and a manifest."""

from __future__ import annotations

from dataclasses import dataclass
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy.typing as npt

from .writers import format_csv, format_field, format_vtk

logger = logging.getLogger(__name__)

ARTIFACT_VERSION = "1"


@dataclass(frozen=True)
class ProducedFile:
    """One artifact listed in ``MANIFEST.txt`` and in the exit report."""

    name: str
    description: str
    columns: tuple[str, ...] = ()


class OutputSink:
    """Write artifacts below ``directory``, each starting with a provenance header.

    Text files get a ``#`` comment line; JSON files carry the same data as their
    first keys; legacy-VTK files use the title line, which follows the
    mandatory version line.

    Args:
        directory: Output directory, created on first write.
        config_hash: sha256 of the validated run configuration.
        version: Artifact format version.
    """

    def __init__(
        self, directory: Path, config_hash: str, version: str = ARTIFACT_VERSION
    ) -> None:
        self.directory = Path(directory)
        self.config_hash = config_hash
        self.version = version
        self._files: list[ProducedFile] = []

    @property
    def title(self) -> str:
        return f"chupscale artifact v{self.version} config sha256:{self.config_hash}"

    @property
    def header(self) -> str:
        return f"# {self.title}"

    @property
    def files(self) -> tuple[ProducedFile, ...]:
        return tuple(self._files)

    def path(self, name: str) -> Path:
        return self.directory / name

    def _write(self, name: str, content: str, description: str, columns: Sequence[str] = ()) -> Path:
        target = self.path(name)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content, encoding="utf-8")
        self._files = [entry for entry in self._files if entry.name != name]
        self._files.append(ProducedFile(name, description, tuple(columns)))
        logger.info("Wrote %s", target)
        return target

    def write_text(self, name: str, body: str, description: str) -> Path:
        return self._write(name, f"{self.header}\n{body}", description)

    def write_csv(
        self,
        name: str,
        columns: Sequence[str],
        rows: Iterable[Sequence[Any]],
        description: str,
    ) -> Path:
        return self._write(
            name, f"{self.header}\n{format_csv(columns, rows)}", description, columns
        )

    def write_json(self, name: str, payload: Mapping[str, Any], description: str) -> Path:
        document = {"artifact_version": self.version, "config_hash": self.config_hash}
        document.update(payload)
        return self._write(name, json.dumps(document, indent=2) + "\n", description)

    def write_field(self, name: str, values: npt.ArrayLike, description: str) -> Path:
        return self._write(name, f"{self.header}\n{format_field(values)}", description)

    def write_vtk(
        self,
        name: str,
        values: npt.ArrayLike,
        spacing: Sequence[float],
        description: str,
        field_name: str = "phi",
    ) -> Path:
        return self._write(name, format_vtk(values, spacing, self.title, field_name), description)

    def write_manifest(self) -> Path:
        """List every produced file with its description and CSV columns."""

        lines = [self.header]
        for entry in self._files:
            lines.append(f"{entry.name}: {entry.description}")
            if entry.columns:
                lines.append(f"  columns: {', '.join(entry.columns)}")
        target = self.path("MANIFEST.txt")
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return target
