"""Periodic reference cell ``Y = Y1 ∪ Y2`` on a uniform voxel grid.

The unit cell ``[0, 1]^d`` is split into ``n`` cells per axis. A grid cell is
solid when its centre lies inside the inclusion; everything else is pore. The
pore-solid interface consists of the grid faces between a pore and a solid
cell (the periodic wrap included). Each solid cell carries a wall class and
every interface face inherits the class of its solid neighbour.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import logging
from pathlib import Path
from typing import Annotated, Literal, Sequence

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import GeometryError
from .stencils import BoolArray, StaggeredGrid

logger = logging.getLogger(__name__)

IntArray = npt.NDArray[np.int64]


class NoInclusion(BaseModel):
    """Cell without perforation."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["none"] = "none"


class BallInclusion(BaseModel):
    """Solid ball, measured with the periodic minimum-image distance."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["ball"] = "ball"
    center: tuple[float, ...] = Field(..., description="Ball centre in [0, 1]^d.")
    radius: float = Field(..., gt=0, lt=0.5, description="Ball radius.")

    @model_validator(mode="after")
    def _check_center(self) -> "BallInclusion":
        if any(not 0.0 <= c <= 1.0 for c in self.center):
            msg = "ball center must lie in [0, 1]^d"
            raise ValueError(msg)
        return self


class BoxInclusion(BaseModel):
    """Axis-aligned solid box ``[lo, hi]``."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["box"] = "box"
    lo: tuple[float, ...] = Field(..., description="Lower corner in [0, 1]^d.")
    hi: tuple[float, ...] = Field(..., description="Upper corner in [0, 1]^d.")

    @model_validator(mode="after")
    def _check_corners(self) -> "BoxInclusion":
        if len(self.lo) != len(self.hi):
            msg = "box corners must have the same dimension"
            raise ValueError(msg)
        for low, high in zip(self.lo, self.hi):
            if not 0.0 <= low < high <= 1.0:
                msg = "box corners must satisfy 0 <= lo < hi <= 1 on every axis"
                raise ValueError(msg)
        return self


class BitmapInclusion(BaseModel):
    """Explicit solid pattern given as a nested 0/1 list (1 = pore)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["bitmap"] = "bitmap"
    path: Path | None = Field(default=None, description="Bitmap file to import.")
    pore: list[list[int]] | None = Field(
        default=None, description="Inline 2-D pore pattern (rows along the first axis)."
    )

    @model_validator(mode="after")
    def _one_source(self) -> "BitmapInclusion":
        if (self.path is None) == (self.pore is None):
            msg = "bitmap inclusion needs exactly one of 'path' or 'pore'"
            raise ValueError(msg)
        return self


Inclusion = Annotated[
    NoInclusion | BallInclusion | BoxInclusion | BitmapInclusion,
    Field(discriminator="kind"),
]


class WallRegion(BaseModel):
    """Axis-aligned region assigning ``label`` to the solid cells it contains."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    label: int = Field(..., ge=1, description="Wall class label.")
    lo: tuple[float, ...]
    hi: tuple[float, ...]


class CellGeometrySpec(BaseModel):
    """Validated description of a reference cell."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    dimension: int = Field(default=2, ge=2, le=3, description="Spatial dimension d.")
    resolution: int = Field(default=64, ge=8, description="Grid cells per unit length.")
    inclusion: Inclusion = Field(default_factory=NoInclusion)
    wall_regions: list[WallRegion] = Field(
        default_factory=list,
        description="Class regions; solid cells outside every region get class 1.",
    )

    @model_validator(mode="after")
    def _check_dimensions(self) -> "CellGeometrySpec":
        inclusion = self.inclusion
        sizes: list[int] = []
        if isinstance(inclusion, BallInclusion):
            sizes.append(len(inclusion.center))
        elif isinstance(inclusion, BoxInclusion):
            sizes.append(len(inclusion.lo))
        sizes.extend(len(region.lo) for region in self.wall_regions)
        sizes.extend(len(region.hi) for region in self.wall_regions)
        if any(size != self.dimension for size in sizes):
            msg = f"geometry coordinates must have {self.dimension} components"
            raise ValueError(msg)
        return self

    @property
    def class_count(self) -> int:
        return max([1, *(region.label for region in self.wall_regions)])


@dataclass(frozen=True)
class InterfaceFaces:
    """Pore-solid faces of a cell.

    Attributes:
        axis: Axis normal to each face.
        index: Face multi-index in the axis face array (``n + 1`` entries along
            ``axis``; the wrap face is listed once, at index 0).
        sign: ``+1`` if the outward normal of the pore side is ``+e_axis``.
        wall_class: Class of the solid neighbour.
    """

    axis: IntArray
    index: IntArray
    sign: IntArray
    wall_class: IntArray

    def __len__(self) -> int:
        return int(self.axis.size)


@dataclass(frozen=True, eq=False)
class ReferenceCell:
    """Immutable rasterised reference cell.

    Attributes:
        dimension: Spatial dimension d.
        resolution: Cells per axis n.
        pore: Boolean pore mask of shape ``(n,) * d``.
        wall_class: Per-cell class map, 0 for pore cells.
        class_count: Number of wall classes N.
    """

    dimension: int
    resolution: int
    pore: BoolArray
    wall_class: IntArray
    class_count: int = 1
    grid: StaggeredGrid = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.pore.setflags(write=False)
        self.wall_class.setflags(write=False)
        h = 1.0 / self.resolution
        grid = StaggeredGrid(
            (self.resolution,) * self.dimension,
            (h,) * self.dimension,
            (True,) * self.dimension,
            self.pore,
        )
        object.__setattr__(self, "grid", grid)

    @property
    def spacing(self) -> float:
        return 1.0 / self.resolution

    @cached_property
    def porosity(self) -> float:
        return float(np.count_nonzero(self.pore)) / float(self.pore.size)

    @cached_property
    def interface(self) -> InterfaceFaces:
        axes: list[IntArray] = []
        indices: list[IntArray] = []
        signs: list[IntArray] = []
        classes: list[IntArray] = []
        for axis in range(self.dimension):
            sign = self.grid.interface_sign[axis].copy()
            # The wrap face appears at both ends; keep index 0 only.
            last = [slice(None)] * self.dimension
            last[axis] = -1
            sign[tuple(last)] = 0
            where = np.argwhere(sign != 0)
            if where.size == 0:
                continue
            face_sign = sign[tuple(where.T)].astype(np.int64)
            # Solid neighbour: upper cell for +1, lower cell for -1.
            solid = where.copy()
            solid[:, axis] = np.where(face_sign > 0, where[:, axis], where[:, axis] - 1)
            solid[:, axis] %= self.resolution
            axes.append(np.full(len(where), axis, dtype=np.int64))
            indices.append(where.astype(np.int64))
            signs.append(face_sign)
            classes.append(self.wall_class[tuple(solid.T)].astype(np.int64))
        if not axes:
            empty = np.zeros(0, dtype=np.int64)
            return InterfaceFaces(empty, np.zeros((0, self.dimension), dtype=np.int64), empty, empty)
        return InterfaceFaces(
            np.concatenate(axes),
            np.concatenate(indices),
            np.concatenate(signs),
            np.concatenate(classes),
        )

    @property
    def face_area(self) -> float:
        return self.spacing ** (self.dimension - 1)

    def interface_measure(self, wall_class: int | None = None) -> float:
        """Staircase measure of the interface, optionally of one class."""

        faces = self.interface
        count = len(faces) if wall_class is None else int(np.count_nonzero(faces.wall_class == wall_class))
        return count * self.face_area

    @cached_property
    def class_measures(self) -> tuple[float, ...]:
        return tuple(self.interface_measure(label) for label in range(1, self.class_count + 1))

    def interface_face_arrays(self, values: npt.ArrayLike) -> list[npt.NDArray[np.float64]]:
        """Scatter per-face normal data into signed face arrays (both wrap copies)."""

        values = np.broadcast_to(np.asarray(values, dtype=float), (len(self.interface),))
        arrays = [np.zeros(self.grid.face_shape(axis)) for axis in range(self.dimension)]
        faces = self.interface
        for axis in range(self.dimension):
            pick = faces.axis == axis
            if not pick.any():
                continue
            index = faces.index[pick]
            signed = faces.sign[pick] * values[pick]
            arrays[axis][tuple(index.T)] = signed
            wrap = index[:, axis] == 0
            if wrap.any():
                mirrored = index[wrap].copy()
                mirrored[:, axis] = self.resolution
                arrays[axis][tuple(mirrored.T)] = signed[wrap]
        return arrays

    def export_bitmap(self) -> str:
        """Serialise the pore mask: header ``d n`` then one row of 0/1 digits per line."""

        return _format_int_field(self.dimension, self.resolution, self.pore.astype(np.int64))

    def export_wall_classes(self) -> str:
        """Serialise the wall-class map in the same layout as :meth:`export_bitmap`."""

        return _format_int_field(self.dimension, self.resolution, self.wall_class)


def _format_int_field(dimension: int, resolution: int, values: IntArray) -> str:
    rows = values.reshape(-1, resolution)
    lines = [f"{dimension} {resolution}"]
    wide = int(values.max(initial=0)) > 9
    for row in rows:
        lines.append(" ".join(str(v) for v in row) if wide else "".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


def _parse_int_field(text: str) -> tuple[int, int, IntArray]:
    lines = [
        line.strip()
        for line in text.strip().splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not lines:
        msg = "empty bitmap"
        raise GeometryError(msg)
    try:
        dimension, resolution = (int(token) for token in lines[0].split())
    except ValueError as exc:
        msg = "bitmap header must be 'd n'"
        raise GeometryError(msg) from exc
    rows = lines[1:]
    if len(rows) != resolution ** (dimension - 1):
        msg = f"bitmap has {len(rows)} rows, expected {resolution ** (dimension - 1)}"
        raise GeometryError(msg)
    parsed = [
        [int(token) for token in (row.split() if " " in row else list(row))] for row in rows
    ]
    if any(len(row) != resolution for row in parsed):
        msg = f"every bitmap row must hold {resolution} entries"
        raise GeometryError(msg)
    values = np.array(parsed, dtype=np.int64).reshape((resolution,) * dimension)
    return dimension, resolution, values


def _cell_centers(dimension: int, resolution: int) -> npt.NDArray[np.float64]:
    axis = (np.arange(resolution) + 0.5) / resolution
    return np.stack(np.meshgrid(*([axis] * dimension), indexing="ij"))


def _rasterize(spec: CellGeometrySpec) -> BoolArray:
    d, n = spec.dimension, spec.resolution
    inclusion = spec.inclusion
    centers = _cell_centers(d, n)
    if isinstance(inclusion, NoInclusion):
        return np.ones((n,) * d, dtype=bool)
    if isinstance(inclusion, BallInclusion):
        offset = centers - np.array(inclusion.center).reshape((d,) + (1,) * d)
        offset -= np.round(offset)
        solid = np.sum(offset**2, axis=0) <= inclusion.radius**2
        return ~solid
    if isinstance(inclusion, BoxInclusion):
        lo = np.array(inclusion.lo).reshape((d,) + (1,) * d)
        hi = np.array(inclusion.hi).reshape((d,) + (1,) * d)
        solid = np.all((centers >= lo) & (centers <= hi), axis=0)
        return ~solid
    if inclusion.path is not None:
        dimension, resolution, values = _parse_int_field(inclusion.path.read_text(encoding="utf-8"))
    else:
        values = np.array(inclusion.pore, dtype=np.int64)
        dimension, resolution = values.ndim, values.shape[0]
    if dimension != d or resolution != n or values.shape != (n,) * d:
        msg = f"bitmap of shape {values.shape} does not match d={d}, n={n}"
        raise GeometryError(msg)
    return values.astype(bool)


def _classify_walls(spec: CellGeometrySpec, pore: BoolArray) -> IntArray:
    d, n = spec.dimension, spec.resolution
    classes = np.where(pore, 0, 1).astype(np.int64)
    if not spec.wall_regions:
        return classes
    centers = _cell_centers(d, n)
    assigned = np.zeros(pore.shape, dtype=bool)
    for region in spec.wall_regions:
        lo = np.array(region.lo).reshape((d,) + (1,) * d)
        hi = np.array(region.hi).reshape((d,) + (1,) * d)
        inside = np.all((centers >= lo) & (centers <= hi), axis=0) & ~pore & ~assigned
        classes[inside] = region.label
        assigned |= inside
    return classes


def _pore_component_count(grid: StaggeredGrid) -> int:
    cells = np.flatnonzero(grid.pore.ravel())
    if cells.size == 0:
        return 0
    rows: list[npt.NDArray[np.int64]] = []
    cols: list[npt.NDArray[np.int64]] = []
    for axis in range(grid.dim):
        _, lower, upper = grid._face_neighbours(axis)
        rows.append(lower)
        cols.append(upper)
    row = np.concatenate(rows)
    col = np.concatenate(cols)
    adjacency = csr_matrix(
        (np.ones(row.size), (row, col)), shape=(grid.size, grid.size)
    )
    adjacency = adjacency[cells][:, cells]
    count, _ = connected_components(adjacency, directed=False)
    return int(count)


def cell_from_mask(
    pore: BoolArray, wall_class: IntArray | None = None, class_count: int | None = None
) -> ReferenceCell:
    """Validate a pore mask and wrap it in a :class:`ReferenceCell`.

    Raises:
        GeometryError: If the mask is not a cube, has no pore cell, or its pore
            phase is disconnected under periodic face adjacency.
    """

    pore = np.array(pore, dtype=bool)
    dimension = pore.ndim
    resolution = pore.shape[0]
    if dimension not in (2, 3) or any(size != resolution for size in pore.shape):
        msg = f"pore mask must be a 2-D or 3-D cube, got shape {pore.shape}"
        raise GeometryError(msg)
    if resolution < 8:
        msg = f"resolution must be at least 8, got {resolution}"
        raise GeometryError(msg)
    if not pore.any():
        msg = "pore phase is empty (porosity 0)"
        raise GeometryError(msg)
    if wall_class is None:
        wall_class = np.where(pore, 0, 1).astype(np.int64)
    wall_class = np.array(wall_class, dtype=np.int64)
    if wall_class.shape != pore.shape:
        msg = "wall-class map must match the pore mask"
        raise GeometryError(msg)
    wall_class = np.where(pore, 0, np.maximum(wall_class, 1))
    labels = int(wall_class.max(initial=1))
    cell = ReferenceCell(
        dimension=dimension,
        resolution=resolution,
        pore=pore,
        wall_class=wall_class,
        class_count=max(labels, class_count or 1),
    )
    components = _pore_component_count(cell.grid)
    if components != 1:
        msg = f"pore phase is disconnected ({components} components)"
        raise GeometryError(msg)
    return cell


def build_cell(spec: CellGeometrySpec) -> ReferenceCell:
    """Rasterise ``spec`` into a validated :class:`ReferenceCell`."""

    pore = _rasterize(spec)
    cell = cell_from_mask(pore, _classify_walls(spec, pore), spec.class_count)
    logger.info(
        "Built %dD cell n=%d porosity=%.6f interface faces=%d",
        cell.dimension,
        cell.resolution,
        cell.porosity,
        len(cell.interface),
    )
    return cell


def porosity(cell: ReferenceCell) -> float:
    """Return the cached pore volume fraction ``|Y1| / |Y|``."""

    return cell.porosity


def wall_fractions(cell: ReferenceCell) -> list[float]:
    """Return ``|dY1_wi| / |dY1_w|`` for every class ``i = 1..N``.

    Raises:
        GeometryError: If the cell has no pore-solid interface.
    """

    total = cell.interface_measure()
    if total == 0.0:
        msg = "cell has no pore-solid interface"
        raise GeometryError(msg)
    return [measure / total for measure in cell.class_measures]


def import_bitmap(text: str, wall_classes: str | None = None) -> ReferenceCell:
    """Rebuild a cell from :meth:`ReferenceCell.export_bitmap` output."""

    _, _, values = _parse_int_field(text)
    classes = _parse_int_field(wall_classes)[2] if wall_classes is not None else None
    return cell_from_mask(values.astype(bool), classes)


def resample(cell: ReferenceCell, factor: int) -> ReferenceCell:
    """Refine a cell exactly by repeating every voxel ``factor`` times per axis."""

    if factor < 1:
        msg = "resampling factor must be a positive integer"
        raise GeometryError(msg)
    pore = cell.pore
    classes = cell.wall_class
    for axis in range(cell.dimension):
        pore = np.repeat(pore, factor, axis=axis)
        classes = np.repeat(classes, factor, axis=axis)
    return cell_from_mask(pore, classes, cell.class_count)


def bitmap_spec(pore: Sequence[Sequence[int]], resolution: int | None = None) -> CellGeometrySpec:
    """Convenience constructor for a 2-D inline bitmap specification."""

    n = resolution if resolution is not None else len(pore)
    return CellGeometrySpec(
        dimension=2, resolution=n, inclusion=BitmapInclusion(pore=[list(row) for row in pore])
    )
