"""Shared reference cells for the solver tests."""

from __future__ import annotations

from pathlib import Path

import pytest

from chupscale.cell_geometry import (
    BallInclusion,
    BoxInclusion,
    CellGeometrySpec,
    ReferenceCell,
    WallRegion,
    build_cell,
)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def trivial_cell() -> ReferenceCell:
    return build_cell(CellGeometrySpec(dimension=2, resolution=16))


@pytest.fixture(scope="session")
def ball_cell() -> ReferenceCell:
    """Centred ball of radius 0.3 on a 32x32 grid."""

    return build_cell(
        CellGeometrySpec(
            dimension=2,
            resolution=32,
            inclusion=BallInclusion(center=(0.5, 0.5), radius=0.3),
        )
    )


@pytest.fixture(scope="session")
def coarse_ball_cell() -> ReferenceCell:
    return build_cell(
        CellGeometrySpec(
            dimension=2,
            resolution=8,
            inclusion=BallInclusion(center=(0.5, 0.5), radius=0.3),
        )
    )


@pytest.fixture(scope="session")
def slab_cell() -> ReferenceCell:
    """Solid slab ``[0, 1] x [0.5, 0.8]``; porosity 0.7 exactly at n = 40."""

    return build_cell(
        CellGeometrySpec(
            dimension=2,
            resolution=40,
            inclusion=BoxInclusion(lo=(0.0, 0.5), hi=(1.0, 0.8)),
        )
    )


@pytest.fixture(scope="session")
def split_ball_cell() -> ReferenceCell:
    """Ball whose left and right halves carry wall classes 1 and 2."""

    return build_cell(
        CellGeometrySpec(
            dimension=2,
            resolution=64,
            inclusion=BallInclusion(center=(0.5, 0.5), radius=0.3),
            wall_regions=[
                WallRegion(label=1, lo=(0.0, 0.0), hi=(0.5, 1.0)),
                WallRegion(label=2, lo=(0.5, 0.0), hi=(1.0, 1.0)),
            ],
        )
    )
