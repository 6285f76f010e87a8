"""Tests for the homogeneous and upscaled steppers."""

from __future__ import annotations

from dataclasses import replace
import logging

import numpy as np
import pytest

from chupscale.cell_solver import EffectiveTensors, assemble_tensors
from chupscale.errors import NumericsError, ParameterError
from chupscale.free_energy import BulkFreeEnergy
from chupscale.macro_solver import (
    AxisBoundary,
    CahnHilliardStepper,
    FaceCondition,
    MacroGrid,
    StepperConfig,
    UpscaledStepper,
    energy_total,
    homogeneous_rhs,
    initial_state,
    macro_rhs,
    mass_total,
    phase_domain_count,
    random_field,
    run_macro,
    step_homogeneous,
    step_macro,
    zero_mass_shift,
)

PERIODIC = AxisBoundary(low=FaceCondition(kind="periodic"), high=FaceCondition(kind="periodic"))


def _smooth_field(grid: MacroGrid) -> np.ndarray:
    x, y = grid.centers()
    return 0.3 * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y) + 0.1 * np.cos(4 * np.pi * x)


def test_stepper_config_accepts_the_lambda_alias() -> None:
    cfg = StepperConfig.model_validate({"lambda": 0.2, "dt": 1e-5})
    assert cfg.lam == 0.2
    assert cfg.model_dump(by_alias=True)["lambda"] == 0.2


def test_periodic_conditions_come_in_pairs() -> None:
    with pytest.raises(ValueError):
        AxisBoundary(low=FaceCondition(kind="periodic"), high=FaceCondition(kind="no-flux"))


def test_trivial_tensors_reproduce_the_homogeneous_rhs() -> None:
    grid = MacroGrid.create((1.0, 1.0), (32, 32), (PERIODIC, AxisBoundary()))
    phi = _smooth_field(grid)
    energy = BulkFreeEnergy.standard()
    tensors = EffectiveTensors.trivial(2, mobility=1.0, lam=0.05)
    expected = homogeneous_rhs(phi, energy, 0.05, 1.0, grid)
    result = macro_rhs(phi, tensors, energy, grid)
    scale = float(np.max(np.abs(expected)))
    np.testing.assert_allclose(result, expected, rtol=0, atol=1e-12 * scale)


def test_zero_width_rhs_is_nonlinear_diffusion() -> None:
    n = 64
    grid = MacroGrid.create((1.0, 1.0), (n, n), (PERIODIC, PERIODIC))
    x, _ = grid.centers()
    phi = 0.5 * np.sin(2 * np.pi * x)
    energy = BulkFreeEnergy.standard()
    result = macro_rhs(phi, EffectiveTensors.trivial(2, 1.0, 0.0), energy, grid)
    h = 1.0 / n
    face_slope = (np.roll(phi, -1, axis=0) - phi) / h
    face_coefficient = 0.5 * (energy.f_prime(phi) + energy.f_prime(np.roll(phi, -1, axis=0)))
    flux = face_coefficient * face_slope
    oracle = (flux - np.roll(flux, 1, axis=0)) / h
    assert np.max(np.abs(result - oracle)) <= 1e-2 * np.max(np.abs(oracle))


def test_trivial_cell_trajectory_matches_the_homogeneous_run() -> None:
    grid = MacroGrid.create((1.0, 1.0), (64, 64), (PERIODIC, AxisBoundary()))
    cfg = StepperConfig(dt=1e-5, lam=0.05, mobility=1.0)
    energy = BulkFreeEnergy.standard()
    start = initial_state(grid, random_field(grid.shape, 0.1, seed=7))
    homogeneous = run_macro(CahnHilliardStepper(grid, energy, cfg), start, 100, cadence=10)
    upscaled = run_macro(
        UpscaledStepper(grid, EffectiveTensors.trivial(2, 1.0, 0.05), energy, cfg),
        start,
        100,
        cadence=10,
    )
    for a, b in zip(homogeneous.snapshots, upscaled.snapshots):
        assert a.time == b.time
        assert np.max(np.abs(a.phi - b.phi)) <= 1e-10


def test_single_step_helpers_agree_with_steppers() -> None:
    grid = MacroGrid.create((1.0, 1.0), (16, 16), (PERIODIC, PERIODIC))
    cfg = StepperConfig(dt=1e-5, lam=0.05)
    energy = BulkFreeEnergy.standard()
    start = initial_state(grid, _smooth_field(grid))
    one = step_homogeneous(start, energy, cfg, grid)
    two = step_macro(start, EffectiveTensors.trivial(2, 1.0, 0.05), energy, cfg, grid)
    assert one.step == two.step == 1
    assert one.time == pytest.approx(1e-5)
    assert np.max(np.abs(one.phi - two.phi)) <= 1e-12


def test_mass_is_conserved_with_closed_boundaries() -> None:
    grid = MacroGrid.create((1.0, 1.0), (32, 32), (AxisBoundary(), AxisBoundary()))
    cfg = StepperConfig(dt=1e-4, lam=0.05)
    start = initial_state(grid, random_field(grid.shape, 0.1, seed=1, mean=0.3))
    trajectory = run_macro(
        CahnHilliardStepper(grid, BulkFreeEnergy.standard(), cfg), start, 200, cadence=50
    )
    assert trajectory.mass_drift() <= 1e-10


def test_upscaled_mass_is_conserved(ball_cell) -> None:
    solved = assemble_tensors(ball_cell, lam=0.05, mobility=1.0).tensors
    # The non-divergence M_v term does not conserve mass.
    tensors = replace(solved, mv=np.zeros((2, 2)))
    grid = MacroGrid.create((1.0, 1.0), (24, 24), (AxisBoundary(), AxisBoundary()))
    energy = BulkFreeEnergy.standard()
    cfg = StepperConfig(dt=1e-5, lam=0.05)
    start = initial_state(grid, random_field(grid.shape, 0.05, seed=5, mean=0.8))
    trajectory = run_macro(UpscaledStepper(grid, tensors, energy, cfg), start, 40, cadence=10)
    records = trajectory.records
    assert trajectory.mass_drift() <= 1e-10
    assert records[0].mass == pytest.approx(
        tensors.porosity * grid.grid.integrate(start.phi), rel=1e-14
    )


def test_inflow_adds_the_prescribed_mass() -> None:
    inflow = AxisBoundary(low=FaceCondition(kind="inflow", value=0.2))
    grid = MacroGrid.create((1.0, 0.5), (20, 10), (inflow, AxisBoundary()))
    assert grid.inflow_rate() == pytest.approx(0.1)
    cfg = StepperConfig(dt=1e-4, lam=0.05)
    start = initial_state(grid, np.full(grid.shape, 0.5))
    trajectory = run_macro(
        CahnHilliardStepper(grid, BulkFreeEnergy.standard(), cfg), start, 50, cadence=25
    )
    assert trajectory.final.time == pytest.approx(5e-3)
    assert trajectory.mass_drift(grid.inflow_rate()) <= 1e-10


def test_constant_field_at_a_well_is_a_fixed_point() -> None:
    grid = MacroGrid.create((1.0, 1.0), (16, 16), (AxisBoundary(), AxisBoundary()))
    cfg = StepperConfig(dt=1e-3, lam=0.05)
    start = initial_state(grid, np.ones(grid.shape))
    final = run_macro(CahnHilliardStepper(grid, BulkFreeEnergy.standard(), cfg), start, 5).final
    np.testing.assert_allclose(final.phi, 1.0, atol=1e-12)


def test_explicit_time_step_cap() -> None:
    grid = MacroGrid.create((1.0, 1.0), (32, 32), (PERIODIC, PERIODIC))
    with pytest.raises(ParameterError, match="stability cap"):
        CahnHilliardStepper(
            grid, BulkFreeEnergy.standard(), StepperConfig(scheme="explicit", dt=1e-3, lam=0.05)
        )


def test_explicit_and_semi_implicit_agree_for_small_steps() -> None:
    grid = MacroGrid.create((1.0, 1.0), (16, 16), (PERIODIC, PERIODIC))
    h = 1.0 / 16
    lam = 0.05
    dt = 0.02 * h**4 / lam**2
    energy = BulkFreeEnergy.standard()
    start = initial_state(grid, _smooth_field(grid))
    explicit = CahnHilliardStepper(grid, energy, StepperConfig(scheme="explicit", dt=dt, lam=lam))
    implicit = CahnHilliardStepper(grid, energy, StepperConfig(dt=dt, lam=lam))
    a = run_macro(explicit, start, 20).final.phi
    b = run_macro(implicit, start, 20).final.phi
    assert np.max(np.abs(a - b)) <= 1e-2 * np.max(np.abs(start.phi))


def test_upscaled_stepper_checks_its_tensors() -> None:
    grid = MacroGrid.create((1.0, 1.0), (8, 8), (PERIODIC, PERIODIC))
    energy = BulkFreeEnergy.standard()
    with pytest.raises(ParameterError):
        UpscaledStepper(grid, EffectiveTensors.trivial(2, 1.0, 0.1), energy, StepperConfig(lam=0.05))
    with pytest.raises(ParameterError):
        UpscaledStepper(grid, EffectiveTensors.trivial(3, 1.0, 0.05), energy, StepperConfig(lam=0.05))


def test_non_finite_initial_data_is_rejected() -> None:
    grid = MacroGrid.create((1.0,), (8,), (PERIODIC,))
    phi = np.zeros(8)
    phi[3] = np.nan
    with pytest.raises(NumericsError):
        initial_state(grid, phi)


def test_energy_of_a_sine_and_of_a_ramp() -> None:
    grid = MacroGrid.create((1.0, 1.0), (64, 64), (PERIODIC, PERIODIC))
    x, _ = grid.centers()
    energy = BulkFreeEnergy(a3=1.0, a1=-1.0)
    assert energy_total(np.sin(2 * np.pi * x), energy, 0.0, grid.grid) == pytest.approx(
        -5 / 32, abs=1e-8
    )
    closed = MacroGrid.create((1.0, 1.0), (16, 16), (AxisBoundary(), AxisBoundary()))
    flat = np.full(closed.shape, 0.2)
    ramp = flat + 0.1 * closed.centers()[0]
    standard = BulkFreeEnergy.standard()
    bulk_only = energy_total(ramp, standard, 0.0, closed.grid)
    assert energy_total(ramp, standard, 0.1, closed.grid) > bulk_only


def test_zero_mass_shift() -> None:
    v, mean = zero_mass_shift(np.full((4, 4), 5.0))
    assert mean == 5.0
    assert np.all(v == 0.0)
    phi = random_field((16, 16), 1.0, seed=3)
    v, mean = zero_mass_shift(phi)
    assert abs(float(np.mean(v))) <= 1e-14
    np.testing.assert_allclose(v + mean, phi, rtol=0, atol=1e-15)


def test_mass_total_scales_with_porosity() -> None:
    grid = MacroGrid.create((2.0, 1.0), (8, 4), (AxisBoundary(), AxisBoundary()))
    assert mass_total(np.ones(grid.shape), 0.5, grid.grid) == pytest.approx(1.0)


@pytest.mark.slow
def test_spinodal_decomposition_dissipates_and_coarsens() -> None:
    grid = MacroGrid.create((1.0, 1.0), (64, 64), (AxisBoundary(), AxisBoundary()))
    cfg = StepperConfig(dt=1e-4, lam=0.05)
    energy = BulkFreeEnergy.standard()
    start = initial_state(grid, random_field(grid.shape, 0.1, seed=42))
    trajectory = run_macro(CahnHilliardStepper(grid, energy, cfg), start, 1000, cadence=1)
    energies = [record.energy for record in trajectory.records]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    assert energies[-1] < energies[0]
    assert abs(trajectory.records[-1].mass - trajectory.records[0].mass) <= 1e-10
    middle = phase_domain_count(trajectory.snapshots[200].phi, grid.grid)
    final = phase_domain_count(trajectory.final.phi, grid.grid)
    assert final <= middle


def test_run_reports_the_zero_mass_split_every_step(caplog: pytest.LogCaptureFixture) -> None:
    caplog.set_level(logging.DEBUG, logger="chupscale.macro_solver")
    grid = MacroGrid.create((1.0, 1.0), (16, 16), (AxisBoundary(), AxisBoundary()))
    cfg = StepperConfig(dt=1e-5, lam=0.05)
    start = initial_state(grid, random_field(grid.shape, 0.1, seed=11, mean=0.3))
    trajectory = run_macro(
        CahnHilliardStepper(grid, BulkFreeEnergy.standard(), cfg), start, 3, cadence=3
    )
    splits = [
        record
        for record in caplog.records
        if record.name == "chupscale.macro_solver" and "max|v|=" in record.getMessage()
    ]
    assert len(splits) == 4
    _, mean = zero_mass_shift(start.phi, grid.grid)
    assert [record.step for record in trajectory.records] == [0, 3]
    assert trajectory.records[0].phi_mean == mean
    assert trajectory.records[-1].phi_mean == pytest.approx(mean, abs=1e-12)


def test_energy_increase_is_reported(caplog: pytest.LogCaptureFixture) -> None:
    caplog.set_level(logging.WARNING, logger="chupscale.macro_solver")
    inflow = AxisBoundary(low=FaceCondition(kind="inflow", value=0.2))
    grid = MacroGrid.create((1.0, 0.5), (20, 10), (inflow, AxisBoundary()))
    cfg = StepperConfig(dt=1e-4, lam=0.05)
    start = initial_state(grid, np.ones(grid.shape))
    trajectory = run_macro(
        CahnHilliardStepper(grid, BulkFreeEnergy.standard(), cfg), start, 5, cadence=5
    )
    assert trajectory.records[-1].energy > trajectory.records[0].energy
    assert "Energy increased beyond tolerance" in caplog.text


def test_dissipative_runs_do_not_warn(caplog: pytest.LogCaptureFixture) -> None:
    caplog.set_level(logging.WARNING, logger="chupscale.macro_solver")
    grid = MacroGrid.create((1.0, 1.0), (32, 32), (AxisBoundary(), AxisBoundary()))
    cfg = StepperConfig(dt=1e-4, lam=0.05)
    start = initial_state(grid, random_field(grid.shape, 0.1, seed=1, mean=0.3))
    run_macro(CahnHilliardStepper(grid, BulkFreeEnergy.standard(), cfg), start, 20, cadence=10)
    assert "Energy increased" not in caplog.text


@pytest.mark.parametrize("shift", [(3, 0), (0, 5), (7, 2)])
def test_rhs_commutes_with_periodic_shifts(shift: tuple[int, int]) -> None:
    grid = MacroGrid.create((1.0, 1.0), (24, 24), (PERIODIC, PERIODIC))
    phi = random_field(grid.shape, 0.4, seed=13, mean=0.2)
    energy = BulkFreeEnergy.standard()
    tensors = replace(
        EffectiveTensors.trivial(2, mobility=1.0, lam=0.05),
        porosity=0.7,
        diffusion=np.array([[0.8, 0.1], [0.1, 0.6]]),
        mv=np.array([[0.05, 0.0], [0.0, 0.02]]),
        mw_a=np.array([[0.5, 0.05], [0.05, 0.4]]),
        mw_b=np.array([[0.01, 0.0], [0.0, 0.02]]),
    )
    shifted = np.roll(phi, shift, axis=(0, 1))

    upscaled = macro_rhs(phi, tensors, energy, grid)
    homogeneous = homogeneous_rhs(phi, energy, 0.05, 1.0, grid)

    scale = float(np.max(np.abs(upscaled)))
    np.testing.assert_allclose(
        macro_rhs(shifted, tensors, energy, grid),
        np.roll(upscaled, shift, axis=(0, 1)),
        rtol=0,
        atol=1e-12 * scale,
    )
    np.testing.assert_allclose(
        homogeneous_rhs(shifted, energy, 0.05, 1.0, grid),
        np.roll(homogeneous, shift, axis=(0, 1)),
        rtol=0,
        atol=1e-12 * float(np.max(np.abs(homogeneous))),
    )


@pytest.mark.slow
def test_upscaled_run_on_a_porous_cell_dissipates(ball_cell) -> None:
    """Isotropic porous tensors give a Cahn-Hilliard flow of width ``lam^2 w d / (theta^2 m)``."""

    solved = assemble_tensors(ball_cell, lam=0.05, mobility=1.0).tensors
    d = float(np.trace(solved.diffusion)) / 2
    w = float(np.trace(solved.mw_a)) / 2
    tensors = replace(
        solved,
        diffusion=d * np.eye(2),
        mv=np.zeros((2, 2)),
        mw_a=w * np.eye(2),
        mw_b=np.zeros((2, 2)),
    )
    assert tensors.porosity < 1.0
    effective_width = 0.05 * np.sqrt(w * d) / tensors.porosity
    grid = MacroGrid.create((1.0, 1.0), (32, 32), (PERIODIC, PERIODIC))
    energy = BulkFreeEnergy.standard()
    cfg = StepperConfig(dt=1e-4, lam=0.05)
    start = initial_state(grid, random_field(grid.shape, 0.1, seed=21))
    trajectory = run_macro(UpscaledStepper(grid, tensors, energy, cfg), start, 200, cadence=1)
    energies = [energy_total(s.phi, energy, effective_width, grid.grid) for s in trajectory.snapshots]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    assert energies[-1] < energies[0]
