"""Scenario registry.

Scenarios are loaded from the ``chupscale.scenarios`` entry point group
declared in :mod:`pyproject.toml` so new run types can be added without
touching the coordinator.
"""

from __future__ import annotations

from importlib import metadata
from typing import Any, Mapping

from .errors import ChUpscaleError
from .interface import ScenarioPlugin


class ScenarioRegistryError(ChUpscaleError):
    """Raised when scenario discovery or instantiation fails."""


class ScenarioRegistry:
    """Discover and cache scenario classes.

    Args:
        entry_point_group: Entry point group to inspect.
        plugins: Optional explicit mapping, mainly for tests.
    """

    def __init__(
        self,
        *,
        entry_point_group: str = "chupscale.scenarios",
        plugins: Mapping[str, type[ScenarioPlugin]] | None = None,
    ) -> None:
        self._entry_point_group = entry_point_group
        self._plugins: dict[str, type[ScenarioPlugin]] = (
            dict(plugins) if plugins is not None else self._load_from_entry_points()
        )

    def names(self) -> tuple[str, ...]:
        """Return the registered scenario names sorted alphabetically."""

        return tuple(sorted(self._plugins))

    def get_class(self, name: str) -> type[ScenarioPlugin]:
        """Return the class registered under ``name``.

        Raises:
            ScenarioRegistryError: If ``name`` is unknown.
        """

        try:
            return self._plugins[name]
        except KeyError as exc:
            msg = f"Unknown scenario '{name}'"
            raise ScenarioRegistryError(msg) from exc

    def create(self, name: str) -> ScenarioPlugin:
        """Instantiate the scenario registered under ``name``.

        Raises:
            ScenarioRegistryError: If the scenario is unknown, fails to
                instantiate or does not satisfy :class:`ScenarioPlugin`.
        """

        scenario_cls = self.get_class(name)
        try:
            instance = scenario_cls()
        except Exception as exc:  # pragma: no cover - defensive rewrap
            msg = f"Failed to instantiate scenario '{name}'"
            raise ScenarioRegistryError(msg) from exc

        if not isinstance(instance, ScenarioPlugin):
            msg = f"Scenario '{name}' does not implement the ScenarioPlugin interface"
            raise ScenarioRegistryError(msg)
        return instance

    def _load_from_entry_points(self) -> dict[str, type[ScenarioPlugin]]:
        discovered: dict[str, type[ScenarioPlugin]] = {}
        for entry_point in metadata.entry_points(group=self._entry_point_group):
            name = entry_point.name
            if name in discovered:
                msg = f"Duplicate scenario name '{name}' discovered in entry points"
                raise ScenarioRegistryError(msg)
            discovered[name] = self._validate_plugin(name, entry_point.load())
        return discovered

    def _validate_plugin(self, name: str, plugin_obj: Any) -> type[ScenarioPlugin]:
        if not isinstance(plugin_obj, type):
            msg = f"Entry point '{name}' does not reference a class"
            raise ScenarioRegistryError(msg)

        for attribute in ("name", "required_sections", "run"):
            if not hasattr(plugin_obj, attribute):
                msg = f"Scenario '{name}' missing required attribute '{attribute}'"
                raise ScenarioRegistryError(msg)

        return plugin_obj
