"""Tests for wetting data, upscaled wall terms and contact angles."""

from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from chupscale.cell_geometry import (
    BallInclusion,
    CellGeometrySpec,
    WallRegion,
    build_cell,
    wall_fractions,
)
from chupscale.errors import DomainError, GeometryError, ParameterError
from chupscale.macro_solver import MacroGrid
from chupscale.wetting import (
    CoefficientProfile,
    WallFractionMap,
    WettingSpec,
    alpha_field,
    critical_wetting_parameter,
    effective_contact_angle,
    g0_from_measures,
    interface_datum,
    robin_g,
    upscaled_g0_channel,
    upscaled_g_tilde,
    upscaled_wetting_field,
    wall_fraction_field,
)


def test_g0_quadrature() -> None:
    spec = WettingSpec(gamma=1.0, cahn=1.0, coefficients=[1.0, 3.0])
    assert g0_from_measures([0.25, 0.75], spec) == pytest.approx(-2.5, abs=1e-15)


def test_g0_cancels_for_opposite_coefficients() -> None:
    spec = WettingSpec(gamma=2.0, cahn=0.5, coefficients=[0.4, -0.4])
    assert g0_from_measures([0.3, 0.3], spec) == pytest.approx(0.0, abs=1e-15)


def test_g0_requires_one_measure_per_class() -> None:
    spec = WettingSpec(coefficients=[1.0, 2.0])
    with pytest.raises(GeometryError):
        g0_from_measures([1.0], spec)


def test_equal_coefficients_reduce_to_the_wall_measure(split_ball_cell) -> None:
    spec = WettingSpec(gamma=0.7, cahn=0.35, coefficients=[0.2, 0.2])
    expected = -(0.7 / 0.35) * 0.2 * split_ball_cell.interface_measure()
    assert upscaled_g0_channel(split_ball_cell, spec) == pytest.approx(expected, abs=1e-12)
    assert float(upscaled_g_tilde(split_ball_cell, spec)) == pytest.approx(expected, abs=1e-12)


def test_normalised_boundary_term_is_a_fraction_average(split_ball_cell) -> None:
    spec = WettingSpec(gamma=1.0, cahn=1.0, coefficients=[1.0, 3.0], normalize=True)
    fractions = [m / split_ball_cell.interface_measure() for m in split_ball_cell.class_measures]
    expected = -(fractions[0] * 1.0 + fractions[1] * 3.0)
    assert float(upscaled_g_tilde(split_ball_cell, spec)) == pytest.approx(expected, abs=1e-12)


def test_coefficient_fields_give_a_field(split_ball_cell) -> None:
    spec = WettingSpec(coefficients=[0.0, 0.0])
    fields = [np.linspace(0.0, 1.0, 5), np.zeros(5)]
    g_tilde = upscaled_g_tilde(split_ball_cell, spec, fields)
    assert g_tilde.shape == (5,)
    assert g_tilde[0] == 0.0
    assert g_tilde[-1] == pytest.approx(-split_ball_cell.class_measures[0])


def test_robin_and_interface_data(split_ball_cell) -> None:
    spec = WettingSpec(gamma=1.0, cahn=0.5, coefficients=[0.1, -0.2])
    assert float(robin_g(spec, 1)) == pytest.approx(-0.2)
    assert float(robin_g(spec, 2)) == pytest.approx(0.4)
    with pytest.raises(GeometryError):
        robin_g(spec, 3)
    datum = interface_datum(spec, split_ball_cell)
    assert datum.shape == (len(split_ball_cell.interface),)
    assert set(np.round(datum, 12)) == {-0.2, 0.4}


def test_alpha_field_values_and_bounds() -> None:
    values = alpha_field([0.0, 0.5, 1.0], a1=1.0, a2=3.0, gamma=1.0, cahn=1.0)
    np.testing.assert_allclose(values, [-3.0, -2.0, -1.0])
    with pytest.raises(ParameterError):
        alpha_field([1.2], 1.0, 3.0, 1.0, 1.0)
    with pytest.raises(ParameterError):
        alpha_field([0.5], 1.0, 3.0, 1.0, 0.0)


def test_wall_fraction_field(split_ball_cell, ball_cell) -> None:
    field = wall_fraction_field([split_ball_cell, ball_cell], [[0, 1], [1, 0]])
    assert field[0, 1] == 1.0
    assert field[0, 0] == pytest.approx(0.5, abs=1 / 64)
    with pytest.raises(GeometryError):
        wall_fraction_field([ball_cell], [2])


SPLIT_BALL = CellGeometrySpec(
    dimension=2,
    resolution=16,
    inclusion=BallInclusion(center=(0.5, 0.5), radius=0.3),
    wall_regions=[
        WallRegion(label=1, lo=(0.0, 0.0), hi=(0.5, 1.0)),
        WallRegion(label=2, lo=(0.5, 0.0), hi=(1.0, 1.0)),
    ],
)
PLAIN_BALL = CellGeometrySpec(
    dimension=2, resolution=16, inclusion=BallInclusion(center=(0.5, 0.5), radius=0.3)
)


def test_coefficient_profiles_sample_the_macro_grid() -> None:
    centers = MacroGrid.create((2.0, 1.0), (8, 4)).centers()
    profile = CoefficientProfile(value=0.5, slope=[1.0, 0.0], amplitude=0.25)
    expected = 0.5 + centers[0] + 0.25 * np.cos(np.pi * centers[0])
    np.testing.assert_allclose(profile.sample(centers, (2.0, 1.0)), expected, atol=1e-15)
    with pytest.raises(ParameterError):
        CoefficientProfile(slope=[1.0]).sample(centers, (2.0, 1.0))


def test_linear_profile_gives_a_linear_wall_term(split_ball_cell) -> None:
    spec = WettingSpec(
        gamma=1.0,
        cahn=0.5,
        coefficients=[0.0, 0.0],
        profiles=[CoefficientProfile(slope=[1.0, 0.0]), CoefficientProfile()],
    )
    grid = MacroGrid.create((1.0, 1.0), (8, 8))
    g_tilde = upscaled_wetting_field(spec, split_ball_cell, grid.centers(), (1.0, 1.0))
    slope = np.diff(g_tilde[:, 0]) / grid.spacing[0]
    np.testing.assert_allclose(slope, -2.0 * split_ball_cell.class_measures[0], rtol=1e-12)
    np.testing.assert_allclose(g_tilde, g_tilde[:, :1], atol=1e-15)


def test_constant_coefficients_give_a_scalar_wall_term(split_ball_cell) -> None:
    spec = WettingSpec(coefficients=[0.2, 0.4])
    centers = MacroGrid.create((1.0, 1.0), (4, 4)).centers()
    result = upscaled_wetting_field(spec, split_ball_cell, centers, (1.0, 1.0))
    assert result.ndim == 0
    assert float(result) == pytest.approx(float(upscaled_g_tilde(split_ball_cell, spec)))
    with pytest.raises(GeometryError):
        upscaled_wetting_field(spec, None, centers, (1.0, 1.0))


def test_wall_map_follows_the_wall_fractions() -> None:
    spec = WettingSpec(
        gamma=1.0,
        cahn=1.0,
        coefficients=[1.0, 3.0],
        normalize=True,
        wall_map=WallFractionMap(cells=[SPLIT_BALL, PLAIN_BALL], bands=[0, 1]),
    )
    centers = MacroGrid.create((1.0, 1.0), (8, 2)).centers()
    alpha = upscaled_wetting_field(spec, None, centers, (1.0, 1.0))
    theta = wall_fractions(build_cell(SPLIT_BALL))[0]
    np.testing.assert_allclose(alpha[:4], -(theta + 3.0 * (1.0 - theta)), atol=1e-14)
    np.testing.assert_allclose(alpha[4:], -1.0, atol=1e-14)
    scaled = upscaled_wetting_field(
        spec.model_copy(update={"normalize": False}), None, centers, (1.0, 1.0)
    )
    plain = build_cell(PLAIN_BALL)
    np.testing.assert_allclose(scaled[4:], -plain.interface_measure(), atol=1e-12)


@pytest.mark.parametrize(
    "data",
    [
        {"coefficients": [1.0, 2.0], "profiles": [{"value": 1.0}]},
        {"coefficients": [1.0], "wall_map": {"cells": [PLAIN_BALL.model_dump()], "bands": [0]}},
        {"coefficients": [1.0, 2.0], "wall_map": {"cells": [PLAIN_BALL.model_dump()], "bands": [1]}},
        {
            "coefficients": [1.0, 2.0],
            "profiles": [{}, {}],
            "wall_map": {"cells": [PLAIN_BALL.model_dump()], "bands": [0]},
        },
    ],
)
def test_inconsistent_field_sources_are_rejected(data: dict) -> None:
    with pytest.raises(ValidationError):
        WettingSpec.model_validate(data)


def test_neutral_wetting_gives_a_right_angle() -> None:
    angle = effective_contact_angle(0.0, gamma=1.0, cahn=0.1)
    assert angle.cosine == 0.0
    assert angle.theta == math.pi / 2


def test_small_amplitude_slope() -> None:
    gamma, cahn = 0.8, 0.2
    g0 = 1e-3 / (math.sqrt(2.0) * cahn)
    angle = effective_contact_angle(g0, gamma, cahn)
    assert angle.amplitude == pytest.approx(1e-3, rel=1e-12)
    assert angle.cosine / angle.amplitude == pytest.approx(1.5, abs=1e-6)


def test_cosine_is_odd_in_the_amplitude() -> None:
    for g0 in (0.05, 0.2, 0.4):
        plus = effective_contact_angle(g0, 1.0, 1.0)
        minus = effective_contact_angle(-g0, 1.0, 1.0)
        assert minus.cosine == pytest.approx(-plus.cosine, abs=1e-14)


def test_effective_coefficient_round_trip() -> None:
    gamma, cahn, a_eff = 0.6, 0.3, 0.45
    angle = effective_contact_angle(a_eff * gamma / cahn, gamma, cahn)
    assert angle.amplitude == pytest.approx(math.sqrt(2.0) * gamma * a_eff, abs=1e-14)


def test_amplitudes_beyond_the_critical_value_are_rejected() -> None:
    critical = critical_wetting_parameter()
    assert 0.6 < critical < 0.7
    assert 0.5 * ((1 + critical) ** 1.5 - (1 - critical) ** 1.5) == pytest.approx(1.0, abs=1e-12)
    beyond = (critical + 0.01) / math.sqrt(2.0)
    with pytest.raises(DomainError, match="no equilibrium angle"):
        effective_contact_angle(beyond, 1.0, 1.0)
    with pytest.raises(DomainError, match="A out of range"):
        effective_contact_angle(2.0, 1.0, 1.0)
    below = (critical - 0.01) / math.sqrt(2.0)
    assert 0.0 < effective_contact_angle(below, 1.0, 1.0).theta < math.pi / 2


def test_contact_angle_requires_positive_parameters() -> None:
    with pytest.raises(ParameterError):
        effective_contact_angle(0.1, 0.0, 1.0)
