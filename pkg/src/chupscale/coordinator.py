"""Coordinator turning run requests into validated configs and scenario runs.

Configuration values are merged in a fixed order: model defaults, runtime
settings from the environment, the YAML file, then CLI flags. The validated
config is hashed so that every artifact can be traced back to it.
"""

from __future__ import annotations

import logging
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from .config import (
    RunConfig,
    RuntimeSettings,
    ScenarioTag,
    config_hash,
    load_config_data,
    merge_parameters,
    serialize_config,
    validate_config,
)
from .errors import ChUpscaleError, ConfigError
from .interface import ScenarioReport
from .output import OutputSink
from .registry import ScenarioRegistry, ScenarioRegistryError

logger = logging.getLogger(__name__)


class CoordinatorError(ChUpscaleError):
    """Raised when a scenario cannot be prepared or fails while running."""


class RunRequest(BaseModel):
    """Describe one scenario run.

    Attributes:
        scenarios: Scenario tags accepted by the calling command. The tag in
            the configuration is kept when it is listed, otherwise the first
            entry is used.
        config_text: Optional YAML configuration text.
        cli_parameters: Nested overrides applied after the configuration file.
    """

    model_config = ConfigDict(extra="forbid")

    scenarios: tuple[ScenarioTag, ...] = Field(..., min_length=1)
    config_text: str | None = Field(default=None, description="YAML configuration text.")
    cli_parameters: dict[str, Any] = Field(
        default_factory=dict, description="Overrides supplied through CLI flags."
    )


class RunCoordinator:
    """Mediator between configuration, the scenario registry and the output sink."""

    def __init__(
        self,
        registry: ScenarioRegistry | None = None,
        settings: RuntimeSettings | None = None,
    ) -> None:
        self._registry = registry or ScenarioRegistry()
        self._settings = settings or RuntimeSettings()

    def build_config(self, request: RunRequest) -> RunConfig:
        """Merge defaults, settings, YAML and CLI values into a validated config.

        Raises:
            ConfigError: If the merged values are invalid or a section the
                scenario needs is missing.
        """

        data, node = load_config_data(request.config_text or "")
        merged = merge_parameters({"run": {"threads": self._settings.threads}}, data)
        merged = merge_parameters(merged, request.cli_parameters)
        if merged.get("scenario") not in request.scenarios:
            merged["scenario"] = request.scenarios[0]
        config = validate_config(merged, node)
        self._check_sections(config)
        return config

    def _check_sections(self, config: RunConfig) -> None:
        try:
            scenario_cls = self._registry.get_class(config.scenario)
        except ScenarioRegistryError as exc:
            msg = f"Unknown scenario '{config.scenario}'"
            raise CoordinatorError(msg) from exc
        for section in scenario_cls.required_sections:
            if getattr(config, section) is None:
                msg = f"scenario '{config.scenario}' needs a '{section}' section"
                raise ConfigError(msg, section)

    def run(self, config: RunConfig) -> ScenarioReport:
        """Run the configured scenario and write the manifest.

        Raises:
            ConfigError: Passed through from the scenario.
            CoordinatorError: If the scenario fails; the message names it.
        """

        try:
            scenario = self._registry.create(config.scenario)
        except ScenarioRegistryError as exc:
            msg = f"Failed to instantiate scenario '{config.scenario}'"
            raise CoordinatorError(msg) from exc

        sink = OutputSink(config.run.output_dir, config_hash(config))
        logger.info("Running scenario '%s' into %s", config.scenario, sink.directory)
        try:
            report = scenario.run(config, sink)
        except ConfigError:
            raise
        except ChUpscaleError as exc:
            msg = f"scenario '{config.scenario}' failed: {exc}"
            raise CoordinatorError(msg) from exc

        sink.write_text("config.yaml", serialize_config(config), "validated run configuration")
        sink.write_manifest()
        files = [entry.name for entry in sink.files] + ["MANIFEST.txt"]
        logger.info("Scenario '%s' finished, %d file(s) written", config.scenario, len(files))
        return report.model_copy(update={"files": files, "output_dir": str(sink.directory)})

    def execute(self, request: RunRequest) -> ScenarioReport:
        return self.run(self.build_config(request))
