"""Pore-scale Cahn-Hilliard runs on a periodically perforated domain.

The perforated grid tiles the reference cell ``1/eps`` times per unit length.
Pore-solid faces carry the ``eps``-scaled wetting datum for ``phi`` and a zero
mass flux; the outer faces follow the same conditions as the macroscopic box.
Time stepping reuses :class:`~chupscale.macro_solver.CahnHilliardStepper`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math
from typing import Sequence

import numpy as np
import numpy.typing as npt
from scipy.interpolate import RegularGridInterpolator

from .cell_geometry import ReferenceCell, _pore_component_count, resample
from .cell_solver import CorrectorV
from .errors import GeometryError, InterpolationError, ParameterError
from .free_energy import BulkFreeEnergy, chemical_potential
from .macro_solver import (
    AxisBoundary,
    CahnHilliardStepper,
    MacroGrid,
    PhaseFieldState,
    StepperConfig,
    Stepper,
    Trajectory,
    _boundary_arrays,
    run_macro,
)
from .stencils import StaggeredGrid, _along
from .wetting import WettingSpec

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

TIME_MATCH_TOLERANCE = 1e-12


@dataclass(frozen=True)
class MicroState(PhaseFieldState):
    """State of a pore-scale run (``phi`` is zero on solid cells)."""


@dataclass(frozen=True, eq=False)
class PerforatedGrid:
    """Tiled pore mask ``Omega^eps`` with its wetting and outer boundary data.

    Attributes:
        cell: Reference cell that is tiled.
        cells_per_unit: ``K = 1 / eps``.
        lengths: Macroscopic box lengths.
        fine: Grid cells per ``eps``-cell and axis.
        boundary: Outer face conditions, one entry per axis.
        wetting: Wall wetting parameters, ``None`` for neutral walls.
        channel_fractions: When set, outer ``"wall"`` faces of the axes other
            than the first carry a periodic class pattern with these
            fractions per ``eps``-period along the first axis.
    """

    cell: ReferenceCell
    cells_per_unit: int
    lengths: tuple[float, ...]
    fine: int
    boundary: tuple[AxisBoundary, ...]
    wetting: WettingSpec | None = None
    channel_fractions: tuple[float, ...] | None = None
    grid: StaggeredGrid = field(init=False, repr=False)
    wall_class: IntArray = field(init=False, repr=False)
    counts: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        counts = tuple(int(round(length * self.cells_per_unit)) for length in self.lengths)
        refined = resample(self.cell, self.fine // self.cell.resolution)
        pore = np.tile(refined.pore, counts)
        classes = np.tile(refined.wall_class, counts)
        shape = pore.shape
        spacing = tuple(length / size for length, size in zip(self.lengths, shape))
        periodic = tuple(bounds.periodic for bounds in self.boundary)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "wall_class", classes)
        object.__setattr__(self, "grid", StaggeredGrid(shape, spacing, periodic, pore))

    @property
    def epsilon(self) -> float:
        return 1.0 / self.cells_per_unit

    @property
    def porosity(self) -> float:
        return float(np.count_nonzero(self.grid.pore)) / float(self.grid.size)

    def _solid_class(self, axis: int) -> IntArray:
        """Class of the solid neighbour of every interface face along ``axis``."""

        grid = self.grid
        upper = np.zeros(grid.face_shape(axis), dtype=np.int64)
        lower = np.zeros(grid.face_shape(axis), dtype=np.int64)
        _along(upper, axis, slice(None, -1))[...] = self.wall_class
        _along(lower, axis, slice(1, None))[...] = self.wall_class
        if grid.periodic[axis]:
            _along(upper, axis, -1)[...] = _along(self.wall_class, axis, 0)
            _along(lower, axis, 0)[...] = _along(self.wall_class, axis, -1)
        sign = grid.interface_sign[axis]
        return np.where(sign > 0, upper, np.where(sign < 0, lower, 0))

    def _channel_pattern(self, axis: int) -> FloatArray:
        """Wall datum along the outer faces normal to ``axis`` for the channel variant."""

        assert self.wetting is not None and self.channel_fractions is not None
        grid = self.grid
        h = grid.spacing[0]
        local = np.mod((np.arange(grid.shape[0]) + 0.5) * h, self.epsilon) / self.epsilon
        bounds = np.cumsum(self.channel_fractions)
        labels = np.minimum(np.searchsorted(bounds, local, side="right"), len(bounds) - 1)
        values = self.wetting.scale * np.array(self.wetting.coefficients, dtype=float)[labels]
        shape = [1] * grid.dim
        shape[0] = grid.shape[0]
        return values.reshape(shape)

    def phi_data(self) -> list[FloatArray]:
        """Closed-face derivative data for ``phi``.

        Interface faces get ``d_n phi = eps * g_class`` with ``g = -(gamma/C_h) a``.
        """

        grid = self.grid
        arrays = _boundary_arrays(grid, self.boundary, "wall")
        if self.wetting is None:
            return arrays
        table = np.concatenate(
            ([0.0], self.epsilon * self.wetting.scale * np.array(self.wetting.coefficients))
        )
        for axis in range(grid.dim):
            labels = self._solid_class(axis)
            if labels.size and int(labels.max()) >= table.size:
                msg = "wall class without a wetting coefficient"
                raise GeometryError(msg)
            arrays[axis] = arrays[axis] + grid.interface_sign[axis] * table[labels]
            if self.channel_fractions is not None and axis > 0:
                bounds = self.boundary[axis]
                pattern = self._channel_pattern(axis)
                if bounds.low.kind == "wall":
                    _along(arrays[axis], axis, 0)[...] = -_along(pattern, axis, 0)
                if bounds.high.kind == "wall":
                    _along(arrays[axis], axis, -1)[...] = _along(pattern, axis, 0)
        return arrays

    def flux_data(self) -> list[FloatArray]:
        return _boundary_arrays(self.grid, self.boundary, "inflow")

    def blocks(self, values: FloatArray) -> FloatArray:
        """Reshape a fine field into ``(C1, f, C2, f, ...)`` blocks of ``eps``-cells."""

        shape: list[int] = []
        for count in self.counts:
            shape.extend((count, self.fine))
        return values.reshape(shape)


def build_perforated_domain(
    cell: ReferenceCell,
    epsilon: float,
    lengths: Sequence[float],
    resolution: int | None = None,
    boundary: Sequence[AxisBoundary] | None = None,
    wetting: WettingSpec | None = None,
    channel_fractions: Sequence[float] | None = None,
) -> PerforatedGrid:
    """Tile ``cell`` with period ``epsilon`` over the box ``lengths``.

    Args:
        cell: Reference cell.
        epsilon: Period; ``1 / epsilon`` must be an integer of at least 2.
        lengths: Box lengths; each times ``1 / epsilon`` must be an integer.
        resolution: Fine grid cells per unit length. Defaults to
            ``n / epsilon``; the per-cell count ``resolution * epsilon`` must
            be an integer multiple of the cell resolution ``n``.
        boundary: Outer face conditions (default no-flux everywhere).
        wetting: Wall wetting parameters.
        channel_fractions: Class fractions of the channel wall pattern.

    Raises:
        GeometryError: If the tiling is not exact or the tiled pore phase is
            disconnected.
    """

    if epsilon <= 0.0:
        msg = f"epsilon must be positive, got {epsilon}"
        raise GeometryError(msg)
    inverse = 1.0 / epsilon
    cells_per_unit = int(round(inverse))
    if cells_per_unit < 2 or not math.isclose(inverse, cells_per_unit, rel_tol=1e-9):
        msg = f"1/epsilon must be an integer >= 2, got {inverse:g}"
        raise GeometryError(msg)
    for length in lengths:
        count = length * cells_per_unit
        if not math.isclose(count, round(count), rel_tol=1e-9) or round(count) < 1:
            msg = f"length {length} is not a whole number of {epsilon:g}-cells"
            raise GeometryError(msg)
    if len(lengths) != cell.dimension:
        msg = f"{len(lengths)} lengths given for a {cell.dimension}D cell"
        raise GeometryError(msg)
    if resolution is None:
        fine = cell.resolution
    else:
        per_cell = resolution / cells_per_unit
        fine = int(round(per_cell))
        if not math.isclose(per_cell, fine, rel_tol=1e-9) or fine % cell.resolution != 0 or fine == 0:
            msg = (
                f"resolution {resolution} does not give a multiple of {cell.resolution} "
                f"grid cells per {epsilon:g}-cell"
            )
            raise GeometryError(msg)
    axes = tuple(boundary) if boundary else tuple(AxisBoundary() for _ in lengths)
    if len(axes) != len(lengths):
        msg = "boundary must list one entry per axis"
        raise GeometryError(msg)
    if channel_fractions is not None:
        if wetting is None or len(channel_fractions) != wetting.class_count:
            msg = "channel fractions need a wetting spec with one coefficient per class"
            raise GeometryError(msg)
        if any(f < 0.0 for f in channel_fractions) or not math.isclose(sum(channel_fractions), 1.0):
            msg = "channel fractions must be non-negative and sum to 1"
            raise GeometryError(msg)
    domain = PerforatedGrid(
        cell=cell,
        cells_per_unit=cells_per_unit,
        lengths=tuple(float(length) for length in lengths),
        fine=fine,
        boundary=axes,
        wetting=wetting,
        channel_fractions=tuple(channel_fractions) if channel_fractions is not None else None,
    )
    components = _pore_component_count(domain.grid)
    if components != 1:
        msg = f"tiled pore phase is disconnected ({components} components)"
        raise GeometryError(msg)
    logger.info(
        "Perforated grid: eps=1/%d shape=%s porosity=%.6f",
        cells_per_unit,
        domain.grid.shape,
        domain.porosity,
    )
    return domain


def step_micro(
    state: PhaseFieldState,
    domain: PerforatedGrid,
    energy: BulkFreeEnergy,
    cfg: StepperConfig,
) -> PhaseFieldState:
    """Advance the pore-scale equation by one step (builds a fresh stepper)."""

    return CahnHilliardStepper(domain, energy, cfg).step(state)


def run_micro(
    stepper: Stepper, state: PhaseFieldState, steps: int, cadence: int = 1
) -> Trajectory:
    """Pore-scale counterpart of :func:`~chupscale.macro_solver.run_macro`."""

    return run_macro(stepper, state, steps, cadence)


def _block_sum(domain: PerforatedGrid, values: FloatArray) -> FloatArray:
    blocks = domain.blocks(values)
    return blocks.sum(axis=tuple(range(1, blocks.ndim, 2)))


def cell_average(values: FloatArray, domain: PerforatedGrid) -> FloatArray:
    """Average a pore-scale field over the pore part of every ``eps``-cell."""

    pore = domain.grid.pore.astype(float)
    weight = _block_sum(domain, pore)
    return _block_sum(domain, np.where(domain.grid.pore, values, 0.0)) / weight


def _fine_centers(domain: PerforatedGrid) -> FloatArray:
    grid = domain.grid
    axes = [(np.arange(n) + 0.5) * h for n, h in zip(grid.shape, grid.spacing)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _sample(values: FloatArray, macro: MacroGrid, domain: PerforatedGrid) -> FloatArray:
    if values.shape == domain.grid.shape:
        return values
    axes = [(np.arange(n) + 0.5) * h for n, h in zip(macro.shape, macro.spacing)]
    interpolator = RegularGridInterpolator(
        axes, values, method="linear", bounds_error=False, fill_value=None
    )
    return interpolator(_fine_centers(domain))


def reconstruct_first_order(
    phi0: FloatArray, xi_v: CorrectorV, domain: PerforatedGrid, macro: MacroGrid
) -> FloatArray:
    """Return ``phi0 - eps * sum_k xi_v^k(x / eps) d_k phi0`` on the pore cells."""

    if xi_v.dimension != domain.grid.dim:
        msg = "corrector dimension does not match the perforated grid"
        raise GeometryError(msg)
    gradients = [
        np.gradient(phi0, h, axis=axis, edge_order=2 if n >= 3 else 1)
        for axis, (n, h) in enumerate(zip(macro.shape, macro.spacing))
    ]
    factor = domain.fine // domain.cell.resolution
    result = _sample(phi0, macro, domain)
    for k, corrector in enumerate(xi_v.fields):
        tiled = corrector
        for axis in range(corrector.ndim):
            tiled = np.repeat(tiled, factor, axis=axis)
        tiled = np.tile(tiled, domain.counts)
        result = result - domain.epsilon * tiled * _sample(gradients[k], macro, domain)
    return np.where(domain.grid.pore, result, 0.0)


def local_equilibrium_diagnostic(
    state: PhaseFieldState, domain: PerforatedGrid, energy: BulkFreeEnergy, lam: float
) -> FloatArray:
    """Standard deviation of the chemical potential within every ``eps``-cell."""

    mu = chemical_potential(energy, state.phi, lam, domain.grid, domain.phi_data())
    pore = domain.grid.pore
    count = _block_sum(domain, pore.astype(float))
    mean = _block_sum(domain, np.where(pore, mu, 0.0)) / count
    expand = np.repeat(mean, domain.fine, axis=0)
    for axis in range(1, mean.ndim):
        expand = np.repeat(expand, domain.fine, axis=axis)
    deviation = np.where(pore, (mu - expand) ** 2, 0.0)
    return np.sqrt(_block_sum(domain, deviation) / count)


@dataclass(frozen=True)
class ComparisonRow:
    epsilon: float
    time: float
    l2: float
    max: float


@dataclass(frozen=True)
class ComparisonReport:
    rows: list[ComparisonRow]

    @property
    def final(self) -> ComparisonRow:
        return self.rows[-1]


def _restrict(values: FloatArray, counts: Sequence[int]) -> FloatArray:
    if values.shape == tuple(counts):
        return values
    shape: list[int] = []
    for size, count in zip(values.shape, counts):
        if size % count != 0:
            msg = f"macro grid of {size} cells cannot be restricted to {count} eps-cells"
            raise InterpolationError(msg)
        shape.extend((count, size // count))
    blocks = values.reshape(shape)
    return blocks.mean(axis=tuple(range(1, blocks.ndim, 2)))


def compare_micro_macro(
    micro: Trajectory, macro: Trajectory, domain: PerforatedGrid
) -> ComparisonReport:
    """Compare cell averages of the pore-scale run with the macroscopic run.

    Every macroscopic snapshot must have a pore-scale snapshot at the same
    time (within 1e-12).

    Raises:
        InterpolationError: If a macro time has no matching micro time or the
            macro grid does not restrict onto the ``eps``-cells.
    """

    if not macro.snapshots:
        msg = "macro trajectory is empty"
        raise ParameterError(msg)
    volume = float(np.prod(domain.lengths)) / float(np.prod(domain.counts))
    rows: list[ComparisonRow] = []
    for target in macro.snapshots:
        match = next(
            (
                candidate
                for candidate in micro.snapshots
                if abs(candidate.time - target.time) <= TIME_MATCH_TOLERANCE * max(1.0, abs(target.time))
            ),
            None,
        )
        if match is None:
            msg = f"no micro snapshot at t={target.time:.12g}"
            raise InterpolationError(msg)
        difference = cell_average(match.phi, domain) - _restrict(target.phi, domain.counts)
        rows.append(
            ComparisonRow(
                epsilon=domain.epsilon,
                time=target.time,
                l2=float(np.sqrt(np.sum(difference**2) * volume)),
                max=float(np.max(np.abs(difference))),
            )
        )
    return ComparisonReport(rows=rows)
