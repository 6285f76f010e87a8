"""Polynomial bulk free energy and the derived quantities used by the solvers.

The energy is described through its derivative ``f(s) = a3 s^3 + a2 s^2 +
a1 s + a0`` and the antiderivative ``F(s) = a3 s^4/4 + a2 s^3/3 + a1 s^2/2 +
a0 s + offset``. Double wells ``F(s) = (s - alpha1)^2 (s - alpha2)^2`` expand
into the same representation with a non-zero ``a0`` and ``offset``.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging
from typing import Protocol, Sequence

import numpy as np
import numpy.typing as npt
from numpy.polynomial import polynomial as P
from pydantic import BaseModel, ConfigDict, Field

from .errors import ParameterError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


class SupportsLaplacian(Protocol):
    """Grid able to apply a discrete Laplacian with optional closed-face data."""

    def laplacian(
        self, u: FloatArray, data: Sequence[FloatArray | None] | None = None
    ) -> FloatArray: ...


@dataclass(frozen=True)
class RatioEvaluation:
    """Result of :meth:`BulkFreeEnergy.ratio`.

    Attributes:
        value: ``f(s) / (f'(s) s)`` with a regularised denominator.
        clamped: Boolean mask of the entries whose denominator was clamped.
    """

    value: FloatArray
    clamped: npt.NDArray[np.bool_]

    @property
    def clamp_count(self) -> int:
        return int(np.count_nonzero(self.clamped))


class BulkFreeEnergy(BaseModel):
    """Immutable polynomial free energy.

    Attributes:
        a0: Constant coefficient of ``f``.
        a1: Linear coefficient of ``f``.
        a2: Quadratic coefficient of ``f``.
        a3: Cubic coefficient of ``f``.
        offset: Additive constant of ``F``.
        wells: Well locations when built by :meth:`from_wells`.
        delta_reg: Floor for ``|f'(s) s|`` in :meth:`ratio` and for ``|s|``
            in :meth:`quotient`.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    a0: float = 0.0
    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    offset: float = 0.0
    wells: tuple[float, float] | None = None
    delta_reg: float = Field(default=1e-8, gt=0)

    @classmethod
    def standard(cls) -> "BulkFreeEnergy":
        """Return ``F(s) = (s^2 - 1)^2 / 4`` with ``f(s) = s^3 - s``."""

        return cls(a3=1.0, a1=-1.0, offset=0.25, wells=(-1.0, 1.0))

    @classmethod
    def from_wells(
        cls, alpha1: float, alpha2: float, delta_reg: float = 1e-8
    ) -> "BulkFreeEnergy":
        """Expand ``F(s) = (s - alpha1)^2 (s - alpha2)^2`` into coefficients.

        Raises:
            ParameterError: If ``alpha2 <= alpha1``.
        """

        if not alpha2 > alpha1:
            msg = f"double well needs alpha2 > alpha1, got ({alpha1}, {alpha2})"
            raise ParameterError(msg)
        sigma = alpha1 + alpha2
        product = alpha1 * alpha2
        return cls(
            a3=4.0,
            a2=-6.0 * sigma,
            a1=2.0 * (sigma**2 + 2.0 * product),
            a0=-2.0 * sigma * product,
            offset=product**2,
            wells=(alpha1, alpha2),
            delta_reg=delta_reg,
        )

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        """Coefficients of ``f`` in increasing degree."""

        return (self.a0, self.a1, self.a2, self.a3)

    def _potential_coefficients(self) -> FloatArray:
        return np.concatenate(([self.offset], P.polyint(self.coefficients)[1:]))

    def f(self, s: npt.ArrayLike) -> FloatArray:
        return P.polyval(np.asarray(s, dtype=float), self.coefficients)

    def f_prime(self, s: npt.ArrayLike) -> FloatArray:
        return P.polyval(np.asarray(s, dtype=float), P.polyder(self.coefficients))

    def f_second(self, s: npt.ArrayLike) -> FloatArray:
        return P.polyval(np.asarray(s, dtype=float), P.polyder(self.coefficients, 2))

    def potential(self, s: npt.ArrayLike) -> FloatArray:
        """Evaluate ``F(s)``."""

        return P.polyval(np.asarray(s, dtype=float), self._potential_coefficients())

    def quotient(self, s: npt.ArrayLike) -> FloatArray:
        """Evaluate ``f(s) / s`` as ``a3 s^2 + a2 s + a1 + a0 / s``.

        Only the ``a0`` term divides; there ``|s|`` is floored at ``delta_reg``.
        """

        s = np.asarray(s, dtype=float)
        smooth = P.polyval(s, (self.a1, self.a2, self.a3))
        if self.a0 == 0.0:
            return smooth
        return smooth + self.a0 / _clamp_magnitude(s, self.delta_reg)

    def ratio(self, s: npt.ArrayLike) -> RatioEvaluation:
        """Evaluate ``r(s) = f(s) / (f'(s) s)`` with a sign-preserving floor."""

        s = np.asarray(s, dtype=float)
        denominator = self.f_prime(s) * s
        clamped = np.abs(denominator) < self.delta_reg
        value = self.f(s) / _clamp_magnitude(denominator, self.delta_reg)
        if clamped.any():
            logger.debug("Ratio denominator clamped at %d point(s)", int(np.count_nonzero(clamped)))
        return RatioEvaluation(value=np.asarray(value), clamped=np.asarray(clamped))

    def wells(self) -> FloatArray:
        """Sorted real roots of ``f``."""

        return _real_roots(self.coefficients)

    def spinodal_points(self) -> FloatArray:
        """Sorted real roots of ``f'``, where the ratio denominator vanishes."""

        return _real_roots(P.polyder(self.coefficients))


def _clamp_magnitude(values: FloatArray, floor: float) -> FloatArray:
    sign = np.where(values < 0.0, -1.0, 1.0)
    return sign * np.maximum(np.abs(values), floor)


def _real_roots(coefficients: Sequence[float] | FloatArray) -> FloatArray:
    trimmed = P.polytrim(np.asarray(coefficients, dtype=float))
    if trimmed.size <= 1:
        return np.zeros(0)
    roots = P.polyroots(trimmed)
    real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots.real))].real
    return np.sort(real)


def check_assumption_F(alpha1: float, alpha2: float) -> bool:
    """Evaluate the admissibility inequality on the well locations.

    Returns the truth of ``25 (a1 + a2)^2 - 20 (a1^2 + a2^2 + 3 a1 a2) >
    (a1 + a2)^2 / 4`` exactly as written (no algebraic simplification).

    Raises:
        ParameterError: Unless ``alpha2 > alpha1 > 0``.
    """

    if not alpha1 > 0.0:
        msg = f"alpha1 must be positive, got {alpha1}"
        raise ParameterError(msg)
    if not alpha2 > alpha1:
        msg = f"alpha2 must exceed alpha1, got ({alpha1}, {alpha2})"
        raise ParameterError(msg)
    total = alpha1 + alpha2
    lhs = 25.0 * total**2 - 20.0 * (alpha1**2 + alpha2**2 + 3.0 * alpha1 * alpha2)
    return bool(lhs > total**2 / 4.0)


def chemical_potential(
    energy: BulkFreeEnergy,
    phi: FloatArray,
    lam: float,
    grid: SupportsLaplacian,
    data: Sequence[FloatArray | None] | None = None,
) -> FloatArray:
    """Return ``mu = f(phi) - lam^2 * laplacian(phi)``.

    Args:
        energy: Bulk free energy.
        phi: Cell-centred order parameter.
        lam: Interface width.
        grid: Grid providing the discrete Laplacian.
        data: Optional closed-face normal derivatives of ``phi``.

    Raises:
        ParameterError: If ``lam`` is negative.
    """

    if lam < 0.0:
        msg = f"interface width must be non-negative, got {lam}"
        raise ParameterError(msg)
    return energy.f(phi) - lam**2 * grid.laplacian(phi, data)
