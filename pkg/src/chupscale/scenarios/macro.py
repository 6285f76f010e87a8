"""Macroscopic runs: the homogeneous equation and the upscaled equation."""

from __future__ import annotations

import logging

import numpy as np

from ..config import RunConfig
from ..interface import ScenarioReport
from ..macro_solver import (
    CahnHilliardStepper,
    UpscaledStepper,
    initial_state,
    phase_domain_count,
    run_macro,
)
from ..output import OutputSink
from ..wetting import upscaled_wetting_field
from .common import (
    initial_phi,
    load_tensors,
    macro_grid,
    require_cell,
    trajectory_summary,
    write_trajectory,
)

logger = logging.getLogger(__name__)


class HomogeneousScenario:
    """Cahn-Hilliard equation without microstructure."""

    name = "homogeneous"
    required_sections: tuple[str, ...] = ()

    def run(self, config: RunConfig, sink: OutputSink) -> ScenarioReport:
        grid = macro_grid(config)
        energy = config.energy.build()
        stepper = CahnHilliardStepper(grid, energy, config.stepper)
        start = initial_state(grid, initial_phi(config, grid))
        trajectory = run_macro(stepper, start, config.run.steps, config.run.cadence)
        write_trajectory(sink, config, trajectory, "", grid.spacing)
        summary = trajectory_summary(trajectory, grid.inflow_rate())
        summary["phase_domains"] = phase_domain_count(trajectory.final.phi, grid.grid)
        return ScenarioReport(scenario=self.name, summary=summary)


class UpscaledScenario:
    """Upscaled equation with tensors read from a ``cell-solve`` tensor file.

    A ``wetting`` section together with a ``geometry`` section adds the
    upscaled wall term of the porous matrix. Coefficient profiles or a
    wall-fraction map make that term a macro field, written to
    ``fields/g_tilde.txt``.
    """

    name = "upscaled"
    required_sections: tuple[str, ...] = ()

    def run(self, config: RunConfig, sink: OutputSink) -> ScenarioReport:
        tensors = load_tensors(config)
        grid = macro_grid(config)
        energy = config.energy.build()
        g_tilde = np.asarray(0.0)
        wetting = config.wetting
        if wetting is not None and (config.geometry is not None or wetting.wall_map is not None):
            cell = None if config.geometry is None else require_cell(config)
            g_tilde = upscaled_wetting_field(wetting, cell, grid.centers(), config.grid.lengths)
            logger.info(
                "Upscaled wall term in [%.6g, %.6g]", float(g_tilde.min()), float(g_tilde.max())
            )
        stepper = UpscaledStepper(grid, tensors, energy, config.stepper, g_tilde)
        start = initial_state(grid, initial_phi(config, grid))
        trajectory = run_macro(stepper, start, config.run.steps, config.run.cadence)
        write_trajectory(sink, config, trajectory, "", grid.spacing)
        summary = trajectory_summary(trajectory, grid.inflow_rate())
        summary["porosity"] = tensors.porosity
        if g_tilde.ndim == 0:
            summary["g_tilde"] = float(g_tilde)
        else:
            sink.write_field("fields/g_tilde.txt", g_tilde, "upscaled wall term")
            summary["g_tilde_min"] = float(g_tilde.min())
            summary["g_tilde_max"] = float(g_tilde.max())
        return ScenarioReport(scenario=self.name, summary=summary)
