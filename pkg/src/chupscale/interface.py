"""Core interfaces shared by the coordinator, the scenarios and the CLI."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, Protocol, runtime_checkable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

if TYPE_CHECKING:
    from .config import RunConfig
    from .output import OutputSink


class ScenarioReport(BaseModel):
    """Exit report of one scenario run.

    ``summary`` only holds plain values (numbers, strings, nested lists) so the
    CLI can print the report as YAML.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    scenario: str = Field(..., description="Scenario tag that produced the report.")
    summary: dict[str, Any] = Field(
        default_factory=dict, description="Monitor summaries and headline results."
    )
    files: list[str] = Field(
        default_factory=list, description="Artifacts written below the output directory."
    )
    output_dir: str | None = None

    def to_plain(self) -> dict[str, Any]:
        """Report as builtin types only (numpy scalars unwrapped)."""

        return _plain(self.model_dump())


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


@runtime_checkable
class ScenarioPlugin(Protocol):
    """Contract for scenario implementations registered as entry points."""

    name: str
    required_sections: tuple[str, ...]

    def run(self, config: RunConfig, sink: OutputSink) -> ScenarioReport:
        """Execute the scenario, writing artifacts through ``sink``."""
