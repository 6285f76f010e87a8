"""Shared fixtures for scenario tests."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path
from typing import Any

import pytest
import yaml

from chupscale.config import RuntimeSettings
from chupscale.coordinator import RunCoordinator, RunRequest
from chupscale.interface import ScenarioReport
from chupscale.registry import ScenarioRegistry
from chupscale.scenarios import (
    CellScenario,
    ChannelScenario,
    CheckFScenario,
    CompareScenario,
    ContactAngleScenario,
    HomogeneousScenario,
    MicroScenario,
    UpscaledScenario,
)

ALL_SCENARIOS = {
    scenario.name: scenario
    for scenario in (
        CellScenario,
        ChannelScenario,
        CheckFScenario,
        CompareScenario,
        ContactAngleScenario,
        HomogeneousScenario,
        MicroScenario,
        UpscaledScenario,
    )
}

RunScenario = Callable[[dict[str, Any], Path], ScenarioReport]


@pytest.fixture
def coordinator() -> RunCoordinator:
    return RunCoordinator(
        registry=ScenarioRegistry(plugins=ALL_SCENARIOS), settings=RuntimeSettings(threads=1)
    )


@pytest.fixture
def run_scenario(coordinator: RunCoordinator) -> RunScenario:
    """Run the scenario named in ``data`` with its output below ``directory``."""

    def _run(data: dict[str, Any], directory: Path) -> ScenarioReport:
        request = RunRequest(
            scenarios=(data["scenario"],),
            config_text=yaml.safe_dump(data),
            cli_parameters={"run": {"output_dir": str(directory)}},
        )
        return coordinator.execute(request)

    return _run


@pytest.fixture
def small_run() -> dict[str, Any]:
    """Short, fully deterministic run settings on a 16x16 grid."""

    return {
        "stepper": {"dt": 1e-5, "lambda": 0.05},
        "grid": {"lengths": [1.0, 1.0], "shape": [16, 16]},
        "initial": {"kind": "noise", "mean": 0.1, "amplitude": 0.1},
        "run": {"steps": 4, "cadence": 2, "seed": 7, "vtk": False},
    }
