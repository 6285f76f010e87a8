"""Wetting boundary data, its upscaled forms and effective contact angles."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import logging
import math
from typing import Sequence

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import bisect

from .cell_geometry import CellGeometrySpec, ReferenceCell, build_cell, wall_fractions
from .errors import DomainError, GeometryError, ParameterError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]


class CoefficientProfile(BaseModel):
    """Macroscopic profile ``a(x) = value + slope . x + amplitude cos(2 pi k x1 / L1)``."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    value: float = 0.0
    slope: list[float] = Field(default_factory=list)
    amplitude: float = 0.0
    wavenumber: int = Field(default=1, ge=0)

    def sample(self, centers: Sequence[FloatArray], lengths: Sequence[float]) -> FloatArray:
        """Evaluate the profile at the macro cell centres.

        Raises:
            ParameterError: If ``slope`` does not have one entry per axis.
        """

        if self.slope and len(self.slope) != len(centers):
            msg = f"slope has {len(self.slope)} entries for a {len(centers)}D grid"
            raise ParameterError(msg)
        result = np.full(centers[0].shape, self.value)
        for gradient, x in zip(self.slope, centers):
            result = result + gradient * x
        if self.amplitude:
            phase = 2.0 * np.pi * self.wavenumber * centers[0] / lengths[0]
            result = result + self.amplitude * np.cos(phase)
        return result


class WallFractionMap(BaseModel):
    """Cells placed in equal-width bands along the first axis.

    ``bands[j]`` is the index into ``cells`` of the cell filling band ``j``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    cells: list[CellGeometrySpec] = Field(min_length=1)
    bands: list[int] = Field(min_length=1)

    @model_validator(mode="after")
    def _known_cells(self) -> "WallFractionMap":
        if any(not 0 <= index < len(self.cells) for index in self.bands):
            msg = f"bands must index cells 0..{len(self.cells) - 1}"
            raise ValueError(msg)
        return self

    def assignment(self, centers: Sequence[FloatArray], length: float) -> IntArray:
        band = np.floor(centers[0] / length * len(self.bands)).astype(np.int64)
        band = np.clip(band, 0, len(self.bands) - 1)
        return np.asarray(self.bands, dtype=np.int64)[band]


class WettingSpec(BaseModel):
    """Wetting parameters of the solid walls.

    Attributes:
        gamma: Surface tension parameter ``2 sqrt(2) phi_e / (3 sigma_lg)``.
        cahn: Cahn number ``C_h = lambda / L``.
        coefficients: Wetting coefficient ``a_i`` of every wall class.
        phi_e: Equilibrium well value (informational).
        normalize: Divide the upscaled boundary term by the total interface
            measure, which turns it into a wall-fraction average.
        profiles: Optional spatial profile ``a_i(x)`` of every class; used by
            the upscaled equation in place of ``coefficients``.
        wall_map: Optional wall-fraction map for two classes; the upscaled
            wall term then follows ``theta_w1(x)`` of the mapped cells.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma: float = Field(default=1.0, ge=0)
    cahn: float = Field(default=1.0, gt=0)
    coefficients: list[float] = Field(default_factory=lambda: [0.0], min_length=1)
    phi_e: float = 1.0
    normalize: bool = False
    profiles: list[CoefficientProfile] | None = None
    wall_map: WallFractionMap | None = None

    @model_validator(mode="after")
    def _field_sources(self) -> "WettingSpec":
        if self.profiles is not None and self.wall_map is not None:
            msg = "profiles and wall_map are mutually exclusive"
            raise ValueError(msg)
        if self.profiles is not None and len(self.profiles) != len(self.coefficients):
            msg = f"expected {len(self.coefficients)} profiles, one per wall class"
            raise ValueError(msg)
        if self.wall_map is not None and len(self.coefficients) != 2:
            msg = "wall_map needs exactly two wall-class coefficients"
            raise ValueError(msg)
        return self

    @property
    def varies(self) -> bool:
        """Whether the upscaled wall term is a macro field."""

        return self.profiles is not None or self.wall_map is not None

    @property
    def class_count(self) -> int:
        return len(self.coefficients)

    @property
    def scale(self) -> float:
        """Prefactor ``-gamma / C_h``."""

        return -self.gamma / self.cahn


def _coefficient(spec: WettingSpec, label: int) -> float:
    if not 1 <= label <= spec.class_count:
        msg = f"wall class {label} outside 1..{spec.class_count}"
        raise GeometryError(msg)
    return spec.coefficients[label - 1]


def robin_g(
    spec: WettingSpec, label: int, coefficient: npt.ArrayLike | None = None
) -> FloatArray:
    """Robin datum ``g = -(gamma / C_h) a`` of one wall class.

    ``coefficient`` replaces the constant ``a_label`` by a value or field.
    """

    value = _coefficient(spec, label) if coefficient is None else coefficient
    return spec.scale * np.asarray(value, dtype=float)


def interface_datum(spec: WettingSpec, cell: ReferenceCell, scale: float = 1.0) -> FloatArray:
    """Per-face datum ``scale * g_class`` on the interface faces of ``cell``."""

    labels = cell.interface.wall_class
    if labels.size and int(labels.max()) > spec.class_count:
        msg = f"cell uses wall class {int(labels.max())} but only {spec.class_count} coefficients are given"
        raise GeometryError(msg)
    table = scale * spec.scale * np.array(spec.coefficients, dtype=float)
    return table[labels - 1] if labels.size else np.zeros(0)


def g0_from_measures(
    measures: Sequence[float], spec: WettingSpec, volume: float = 1.0
) -> float:
    """Return ``-(gamma / C_h) sum_i a_i |w_i| / |Y|``.

    Raises:
        GeometryError: If the number of measures differs from the class count.
    """

    if len(measures) != spec.class_count:
        msg = f"expected {spec.class_count} class measures, got {len(measures)}"
        raise GeometryError(msg)
    weighted = math.fsum(a * w for a, w in zip(spec.coefficients, measures))
    return spec.scale * weighted / volume


def upscaled_g0_channel(cell: ReferenceCell, spec: WettingSpec) -> float:
    """Area-weighted wall datum of a straight channel from the class measures of ``cell``."""

    measures = list(cell.class_measures)
    if len(measures) < spec.class_count:
        measures.extend([0.0] * (spec.class_count - len(measures)))
    if len(measures) > spec.class_count:
        msg = f"cell has {len(measures)} wall classes, spec defines {spec.class_count}"
        raise GeometryError(msg)
    return g0_from_measures(measures, spec)


def upscaled_g_tilde(
    cell: ReferenceCell,
    spec: WettingSpec,
    coefficients: Sequence[npt.ArrayLike] | None = None,
) -> FloatArray:
    """Upscaled wetting term ``-(gamma / C_h) sum_i a_i(x) |dY1_wi|``.

    Args:
        cell: Reference cell providing the per-class interface measures.
        spec: Wetting parameters; constant coefficients are used unless
            ``coefficients`` supplies one value or macro field per class.
        coefficients: Optional per-class coefficient fields ``a_i(x)``.

    Returns:
        Scalar array (0-d for constant data, otherwise field-shaped).
    """

    fields = list(spec.coefficients) if coefficients is None else list(coefficients)
    if len(fields) != spec.class_count:
        msg = f"expected {spec.class_count} coefficient fields, got {len(fields)}"
        raise GeometryError(msg)
    measures = cell.class_measures
    total = sum(
        (np.asarray(a, dtype=float) * (measures[i] if i < len(measures) else 0.0))
        for i, a in enumerate(fields)
    )
    result = spec.scale * np.asarray(total, dtype=float)
    if spec.normalize:
        area = cell.interface_measure()
        if area == 0.0:
            msg = "cannot normalise: cell has no pore-solid interface"
            raise GeometryError(msg)
        result = result / area
    return result


def alpha_field(
    theta_w1: npt.ArrayLike, a1: float, a2: float, gamma: float, cahn: float
) -> FloatArray:
    """Evaluate ``-(gamma / C_h) (a1 theta_w1 + a2 (1 - theta_w1))`` pointwise.

    Raises:
        ParameterError: If a fraction lies outside ``[0, 1]`` or ``cahn <= 0``.
    """

    theta = np.asarray(theta_w1, dtype=float)
    if np.any((theta < 0.0) | (theta > 1.0)) or not np.all(np.isfinite(theta)):
        msg = "wall fractions must lie in [0, 1]"
        raise ParameterError(msg)
    if cahn <= 0.0:
        msg = f"Cahn number must be positive, got {cahn}"
        raise ParameterError(msg)
    return -(gamma / cahn) * (a1 * theta + a2 * (1.0 - theta))


def wall_fraction_field(
    cells: Sequence[ReferenceCell], assignment: npt.ArrayLike
) -> FloatArray:
    """Map a macro field of cell indices to the first-class wall fraction."""

    index = np.asarray(assignment, dtype=np.int64)
    table = np.array([wall_fractions(cell)[0] for cell in cells])
    if index.size and (index.min() < 0 or index.max() >= len(cells)):
        msg = "cell assignment refers to an unknown cell"
        raise GeometryError(msg)
    return table[index]


def upscaled_wetting_field(
    spec: WettingSpec,
    cell: ReferenceCell | None,
    centers: Sequence[FloatArray],
    lengths: Sequence[float],
) -> FloatArray:
    """Upscaled wall term of the porous matrix on the macro grid.

    A ``wall_map`` gives ``alpha(x)`` from the wall fractions of the mapped
    cells, scaled by their interface measure unless ``spec.normalize`` is set.
    ``profiles`` feed ``a_i(x)`` into :func:`upscaled_g_tilde` for ``cell``;
    otherwise the constant coefficients are used.

    Raises:
        GeometryError: If ``cell`` is needed but missing, or a mapped cell has
            no pore-solid interface.
    """

    if spec.wall_map is not None:
        cells = [build_cell(geometry) for geometry in spec.wall_map.cells]
        assignment = spec.wall_map.assignment(centers, lengths[0])
        theta = wall_fraction_field(cells, assignment)
        a1, a2 = spec.coefficients
        alpha = alpha_field(theta, a1, a2, spec.gamma, spec.cahn)
        if spec.normalize:
            return alpha
        measures = np.array([mapped.interface_measure() for mapped in cells])
        return alpha * measures[assignment]
    if cell is None:
        msg = "the upscaled wall term needs a reference cell"
        raise GeometryError(msg)
    if spec.profiles is None:
        return upscaled_g_tilde(cell, spec)
    coefficients = [profile.sample(centers, lengths) for profile in spec.profiles]
    return upscaled_g_tilde(cell, spec, coefficients)


def _cosine(amplitude: float) -> float:
    return 0.5 * ((1.0 + amplitude) ** 1.5 - (1.0 - amplitude) ** 1.5)


@lru_cache(maxsize=1)
def critical_wetting_parameter() -> float:
    """Largest ``A`` for which the contact-angle cosine stays within ``[-1, 1]``."""

    return float(bisect(lambda a: _cosine(a) - 1.0, 0.0, 1.0, xtol=1e-15, maxiter=200))


@dataclass(frozen=True)
class ContactAngle:
    """Effective equilibrium contact angle and its intermediates."""

    a_eff: float
    amplitude: float
    cosine: float
    theta: float

    @property
    def degrees(self) -> float:
        return math.degrees(self.theta)


def effective_contact_angle(g0: float, gamma: float, cahn: float) -> ContactAngle:
    """Contact angle from an upscaled wall datum.

    ``a_eff = g0 C_h / gamma``, ``A = sqrt(2) gamma a_eff`` and
    ``cos(theta) = ((1 + A)^(3/2) - (1 - A)^(3/2)) / 2``.

    Raises:
        ParameterError: If ``gamma`` or ``cahn`` is not positive.
        DomainError: If ``|A| > 1`` or the cosine leaves ``[-1, 1]``.
    """

    if gamma <= 0.0 or cahn <= 0.0:
        msg = "gamma and the Cahn number must be positive"
        raise ParameterError(msg)
    a_eff = g0 * cahn / gamma
    amplitude = math.sqrt(2.0) * gamma * a_eff
    if abs(amplitude) > 1.0:
        msg = f"A out of range (A = {amplitude:.6g})"
        raise DomainError(msg)
    cosine = _cosine(amplitude)
    if abs(cosine) > 1.0:
        msg = f"no equilibrium angle (cos = {cosine:.6g})"
        raise DomainError(msg)
    theta = math.acos(cosine)
    logger.debug("Contact angle: A=%.6g cos=%.6g theta=%.6g rad", amplitude, cosine, theta)
    return ContactAngle(a_eff=a_eff, amplitude=amplitude, cosine=cosine, theta=theta)
