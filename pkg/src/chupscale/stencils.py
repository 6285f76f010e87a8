"""Finite-volume operators on masked, cell-centred uniform grids.

Every solver in the package works on the same discretisation: values live at
cell centres, gradients live on faces, and a boolean pore mask removes solid
cells. A face is *open* when both neighbouring cells are pore cells (the wrap
face of a periodic axis included). Closed faces carry prescribed data: a
normal derivative for the order parameter or a flux for mass transport.

Face arrays along axis ``k`` have ``shape[k] + 1`` entries on that axis.
Face ``j`` separates cell ``j - 1`` from cell ``j``; on a periodic axis faces
``0`` and ``N`` are the same wrap face and always hold equal values.
"""

from __future__ import annotations

from functools import cached_property
from typing import Sequence

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

FloatArray = npt.NDArray[np.float64]
BoolArray = npt.NDArray[np.bool_]


def _along(array: npt.NDArray[np.generic], axis: int, index: slice | int) -> npt.NDArray[np.generic]:
    """Slice ``array`` along ``axis`` only."""

    selector: list[slice | int] = [slice(None)] * array.ndim
    selector[axis] = index
    return array[tuple(selector)]


class StaggeredGrid:
    """Cell-centred grid with an optional pore mask and per-axis periodicity.

    Args:
        shape: Number of cells per axis.
        spacing: Cell size per axis.
        periodic: Whether each axis wraps around.
        pore: Boolean mask of active cells. Defaults to every cell.
    """

    def __init__(
        self,
        shape: Sequence[int],
        spacing: Sequence[float],
        periodic: Sequence[bool],
        pore: BoolArray | None = None,
    ) -> None:
        self.shape = tuple(int(n) for n in shape)
        self.spacing = tuple(float(h) for h in spacing)
        self.periodic = tuple(bool(p) for p in periodic)
        if not (len(self.shape) == len(self.spacing) == len(self.periodic)):
            msg = "shape, spacing and periodic must have one entry per axis"
            raise ValueError(msg)
        if pore is None:
            pore = np.ones(self.shape, dtype=bool)
        pore = np.asarray(pore, dtype=bool)
        if pore.shape != self.shape:
            msg = f"pore mask shape {pore.shape} does not match grid shape {self.shape}"
            raise ValueError(msg)
        self.pore = pore
        self.dim = len(self.shape)
        self.cell_volume = float(np.prod(self.spacing))
        self.face_open: list[BoolArray] = []
        self.interface_sign: list[npt.NDArray[np.int8]] = []
        for axis in range(self.dim):
            opened, sign = self._classify_faces(axis)
            self.face_open.append(opened)
            self.interface_sign.append(sign)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def face_shape(self, axis: int) -> tuple[int, ...]:
        shape = list(self.shape)
        shape[axis] += 1
        return tuple(shape)

    def _classify_faces(self, axis: int) -> tuple[BoolArray, npt.NDArray[np.int8]]:
        lower = _along(self.pore, axis, slice(None, -1))
        upper = _along(self.pore, axis, slice(1, None))
        opened = np.zeros(self.face_shape(axis), dtype=bool)
        sign = np.zeros(self.face_shape(axis), dtype=np.int8)
        interior = slice(1, -1)
        _along(opened, axis, interior)[...] = lower & upper
        # +1: pore below the face, outward normal +e_axis; -1: pore above.
        _along(sign, axis, interior)[...] = (lower & ~upper).astype(np.int8) - (
            ~lower & upper
        ).astype(np.int8)
        if self.periodic[axis]:
            last = _along(self.pore, axis, -1)
            first = _along(self.pore, axis, 0)
            wrap_open = last & first
            wrap_sign = (last & ~first).astype(np.int8) - (~last & first).astype(np.int8)
            for end in (0, -1):
                _along(opened, axis, end)[...] = wrap_open
                _along(sign, axis, end)[...] = wrap_sign
        return opened, sign

    # ------------------------------------------------------------------
    # Array operators
    # ------------------------------------------------------------------
    def grad(
        self, u: FloatArray, axis: int, data: FloatArray | None = None
    ) -> FloatArray:
        """Face derivative along ``axis``; closed faces take ``data`` (default 0)."""

        h = self.spacing[axis]
        out = np.zeros(self.face_shape(axis))
        _along(out, axis, slice(1, -1))[...] = (
            _along(u, axis, slice(1, None)) - _along(u, axis, slice(None, -1))
        ) / h
        if self.periodic[axis]:
            wrap = (_along(u, axis, 0) - _along(u, axis, -1)) / h
            _along(out, axis, 0)[...] = wrap
            _along(out, axis, -1)[...] = wrap
        if data is None:
            return np.where(self.face_open[axis], out, 0.0)
        return np.where(self.face_open[axis], out, data)

    def div(self, fluxes: Sequence[FloatArray]) -> FloatArray:
        """Cell divergence of face fluxes; solid cells return zero."""

        total = np.zeros(self.shape)
        for axis, flux in enumerate(fluxes):
            total = total + (
                _along(flux, axis, slice(1, None)) - _along(flux, axis, slice(None, -1))
            ) / self.spacing[axis]
        return np.where(self.pore, total, 0.0)

    def laplacian(
        self, u: FloatArray, data: Sequence[FloatArray | None] | None = None
    ) -> FloatArray:
        """Second-order Laplacian with closed-face derivative data."""

        data = data if data is not None else [None] * self.dim
        return self.div([self.grad(u, axis, data[axis]) for axis in range(self.dim)])

    def face_average(self, c: FloatArray, axis: int) -> FloatArray:
        """Average cell values onto faces; boundary faces copy their only neighbour."""

        out = np.zeros(self.face_shape(axis))
        _along(out, axis, slice(1, -1))[...] = 0.5 * (
            _along(c, axis, slice(1, None)) + _along(c, axis, slice(None, -1))
        )
        if self.periodic[axis]:
            wrap = 0.5 * (_along(c, axis, 0) + _along(c, axis, -1))
            _along(out, axis, 0)[...] = wrap
            _along(out, axis, -1)[...] = wrap
        else:
            _along(out, axis, 0)[...] = _along(c, axis, 0)
            _along(out, axis, -1)[...] = _along(c, axis, -1)
        return out

    def center_grad(
        self, u: FloatArray, axis: int, data: FloatArray | None = None
    ) -> FloatArray:
        """Cell-centred derivative as the mean of the two face derivatives."""

        faces = self.grad(u, axis, data)
        return 0.5 * (_along(faces, axis, slice(1, None)) + _along(faces, axis, slice(None, -1)))

    def tensor_flux(
        self,
        u: FloatArray,
        tensor: FloatArray,
        axis: int,
        data: FloatArray | None = None,
    ) -> FloatArray:
        """Face flux ``sum_k T[axis, k] d_k u`` on faces normal to ``axis``.

        ``tensor`` is either a constant ``(d, d)`` matrix or a ``(d, d, *shape)``
        field. Closed faces carry ``T[axis, axis] * data`` only.
        """

        field = tensor.ndim > 2
        diag = tensor[axis, axis]
        diag_face = self.face_average(diag, axis) if field else diag
        flux = diag_face * self.grad(u, axis, data)
        for other in range(self.dim):
            if other == axis:
                continue
            coefficient = tensor[axis, other]
            if not field and coefficient == 0.0:
                continue
            cross = coefficient * self.center_grad(u, other)
            flux = flux + np.where(self.face_open[axis], self.face_average(cross, axis), 0.0)
        return flux

    def tensor_divergence(
        self,
        u: FloatArray,
        tensor: FloatArray,
        data: Sequence[FloatArray | None] | None = None,
    ) -> FloatArray:
        """``div(T grad u)`` in conservative flux form."""

        data = data if data is not None else [None] * self.dim
        return self.div(
            [self.tensor_flux(u, tensor, axis, data[axis]) for axis in range(self.dim)]
        )

    def integrate(self, u: FloatArray) -> float:
        """Midpoint quadrature over pore cells."""

        return float(np.sum(np.where(self.pore, u, 0.0)) * self.cell_volume)

    # ------------------------------------------------------------------
    # Sparse operators (homogeneous closed-face data)
    # ------------------------------------------------------------------
    @cached_property
    def _cell_index(self) -> npt.NDArray[np.int64]:
        return np.arange(self.size, dtype=np.int64).reshape(self.shape)

    def _face_index(self, axis: int) -> npt.NDArray[np.int64]:
        shape = self.face_shape(axis)
        return np.arange(int(np.prod(shape)), dtype=np.int64).reshape(shape)

    def _face_neighbours(
        self, axis: int
    ) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.int64], npt.NDArray[np.int64]]:
        """Return (face, lower cell, upper cell) index triples for every open face."""

        faces = self._face_index(axis)
        cells = self._cell_index
        face_ids = [_along(faces, axis, slice(1, -1))]
        lower_ids = [_along(cells, axis, slice(None, -1))]
        upper_ids = [_along(cells, axis, slice(1, None))]
        opened = [_along(self.face_open[axis], axis, slice(1, -1))]
        if self.periodic[axis]:
            for end in (0, -1):
                face_ids.append(_along(faces, axis, end))
                lower_ids.append(_along(cells, axis, -1))
                upper_ids.append(_along(cells, axis, 0))
                opened.append(_along(self.face_open[axis], axis, end))
        mask = np.concatenate([o.ravel() for o in opened])
        face = np.concatenate([f.ravel() for f in face_ids])[mask]
        lower = np.concatenate([c.ravel() for c in lower_ids])[mask]
        upper = np.concatenate([c.ravel() for c in upper_ids])[mask]
        return face, lower, upper

    def grad_matrix(self, axis: int) -> sp.csr_matrix:
        """Faces-by-cells matrix of :meth:`grad` with zero closed-face data."""

        face, lower, upper = self._face_neighbours(axis)
        h = self.spacing[axis]
        rows = np.concatenate([face, face])
        cols = np.concatenate([lower, upper])
        vals = np.concatenate([np.full(face.size, -1.0 / h), np.full(face.size, 1.0 / h)])
        n_faces = int(np.prod(self.face_shape(axis)))
        return sp.csr_matrix((vals, (rows, cols)), shape=(n_faces, self.size))

    def div_matrix(self, axis: int) -> sp.csr_matrix:
        """Cells-by-faces matrix of the axis contribution to :meth:`div`."""

        faces = self._face_index(axis)
        cells = self._cell_index
        h = self.spacing[axis]
        pore = self.pore.ravel()
        upper_face = _along(faces, axis, slice(1, None)).ravel()
        lower_face = _along(faces, axis, slice(None, -1)).ravel()
        cell = cells.ravel()
        keep = pore[cell]
        rows = np.concatenate([cell[keep], cell[keep]])
        cols = np.concatenate([upper_face[keep], lower_face[keep]])
        vals = np.concatenate(
            [np.full(int(keep.sum()), 1.0 / h), np.full(int(keep.sum()), -1.0 / h)]
        )
        n_faces = int(np.prod(self.face_shape(axis)))
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.size, n_faces))

    def laplacian_matrix(self) -> sp.csr_matrix:
        """Sparse Laplacian with zero closed-face derivative data."""

        total = sp.csr_matrix((self.size, self.size))
        for axis in range(self.dim):
            total = total + self.div_matrix(axis) @ self.grad_matrix(axis)
        return total.tocsr()

    def _center_grad_matrix(self, axis: int) -> sp.csr_matrix:
        faces = self._face_index(axis)
        cells = self._cell_index.ravel()
        upper_face = _along(faces, axis, slice(1, None)).ravel()
        lower_face = _along(faces, axis, slice(None, -1)).ravel()
        rows = np.concatenate([cells, cells])
        cols = np.concatenate([upper_face, lower_face])
        vals = np.full(rows.size, 0.5)
        n_faces = int(np.prod(self.face_shape(axis)))
        to_cells = sp.csr_matrix((vals, (rows, cols)), shape=(self.size, n_faces))
        return (to_cells @ self.grad_matrix(axis)).tocsr()

    def _open_average_matrix(self, axis: int) -> sp.csr_matrix:
        face, lower, upper = self._face_neighbours(axis)
        rows = np.concatenate([face, face])
        cols = np.concatenate([lower, upper])
        vals = np.full(rows.size, 0.5)
        n_faces = int(np.prod(self.face_shape(axis)))
        return sp.csr_matrix((vals, (rows, cols)), shape=(n_faces, self.size))

    def tensor_divergence_matrix(self, tensor: FloatArray) -> sp.csr_matrix:
        """Sparse form of :meth:`tensor_divergence` for a constant tensor."""

        total = sp.csr_matrix((self.size, self.size))
        for axis in range(self.dim):
            flux = float(tensor[axis, axis]) * self.grad_matrix(axis)
            for other in range(self.dim):
                coefficient = float(tensor[axis, other])
                if other == axis or coefficient == 0.0:
                    continue
                flux = flux + coefficient * (
                    self._open_average_matrix(axis) @ self._center_grad_matrix(other)
                )
            total = total + self.div_matrix(axis) @ flux
        return total.tocsr()
