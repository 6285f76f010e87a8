"""Straight channel with heterogeneous walls.

The wall classes of the reference cell are averaged into one Robin datum
``g0``, which is then imposed on the channel walls of a homogeneous run.
"""

from __future__ import annotations

import logging

from ..config import RunConfig
from ..errors import ConfigError
from ..interface import ScenarioReport
from ..macro_solver import (
    AxisBoundary,
    CahnHilliardStepper,
    FaceCondition,
    MacroGrid,
    initial_state,
    run_macro,
)
from ..output import OutputSink
from ..wetting import upscaled_g0_channel
from .common import (
    initial_phi,
    require_cell,
    trajectory_summary,
    uniform_wetting,
    write_trajectory,
)

logger = logging.getLogger(__name__)


def _wall(face: FaceCondition, g0: float) -> FaceCondition:
    if face.kind == "inflow":
        return face
    return FaceCondition(kind="wall", value=g0)


def channel_grid(config: RunConfig, g0: float) -> MacroGrid:
    """Macro grid whose non-periodic faces across the flow axis carry ``g0``.

    Axis 0 is the channel axis and keeps its configured conditions.
    """

    axes = list(config.grid.axes)
    for index in range(1, len(axes)):
        bounds = axes[index]
        if not bounds.periodic:
            axes[index] = AxisBoundary(low=_wall(bounds.low, g0), high=_wall(bounds.high, g0))
    spec = config.grid.model_copy(update={"boundary": tuple(axes)})
    return MacroGrid(spec)


class ChannelScenario:
    """Homogeneous run with the area-weighted wall datum of the cell."""

    name = "channel"
    required_sections: tuple[str, ...] = ("geometry", "wetting")

    def run(self, config: RunConfig, sink: OutputSink) -> ScenarioReport:
        cell = require_cell(config)
        wetting = uniform_wetting(config)
        if wetting is None:
            msg = "channel scenario needs a 'wetting' section"
            raise ConfigError(msg, "wetting")
        g0 = upscaled_g0_channel(cell, wetting)
        logger.info("Channel wall datum g0=%r", g0)
        grid = channel_grid(config, g0)
        stepper = CahnHilliardStepper(grid, config.energy.build(), config.stepper)
        start = initial_state(grid, initial_phi(config, grid))
        trajectory = run_macro(stepper, start, config.run.steps, config.run.cadence)
        write_trajectory(sink, config, trajectory, "", grid.spacing)
        summary = trajectory_summary(trajectory, grid.inflow_rate())
        summary.update(
            g0=g0,
            wall_measure=float(cell.interface_measure()),
            class_measures=[float(m) for m in cell.class_measures],
        )
        return ScenarioReport(scenario=self.name, summary=summary)
