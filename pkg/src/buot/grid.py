"""Rectangular mesh grids, fields on them, and the discrete div / grad pair.

Storage layout
--------------
Scalar fields are flat float64 arrays of length ``n_points`` in row-major
(C) order over the ``(N_0+1, ..., N_{d-1}+1)`` point lattice.  Flux fields are
``(d, n_points)`` arrays, one flat row per component.  Viewing the flat index
along axis ``i`` as a block ``(outer, n_i, inner)`` with ``inner = strides[i]``
expresses every stencil without ghost storage: the value behind the face
``x_i = 0`` is an implicit zero.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from buot import _backend

log = logging.getLogger(__name__)

__all__ = [
    "Grid",
    "ScalarField",
    "FluxField",
    "make_grid",
    "divergence",
    "gradient",
    "inner_h",
    "norm_h2",
    "objective_flux",
    "objective_source",
    "operator_norm_bound",
    "power_iteration_norm",
    "finite_convergence_threshold",
]


def _per_axis(value, d, name, kind):
    if np.ndim(value) == 0:
        values = (kind(value),) * d
    else:
        values = tuple(kind(v) for v in value)
        if len(values) != d:
            raise ValueError(f"{name} has {len(values)} entries for d={d}")
    return values


@dataclass(frozen=True)
class Grid:
    """Uniform mesh of ``[0, L_0] x ... x [0, L_{d-1}]`` with ``N_i`` cells per axis.

    ``L`` and ``N`` may be scalars (the usual cube ``[0, L]^d``) or per-axis
    sequences for a box.  Spacing is derived, never stored.
    """

    d: int
    lengths: tuple
    sizes: tuple

    @property
    def L(self) -> float:
        if len(set(self.lengths)) != 1:
            raise ValueError("grid has per-axis lengths; use .lengths")
        return self.lengths[0]

    @property
    def N(self) -> int:
        if len(set(self.sizes)) != 1:
            raise ValueError("grid has per-axis sizes; use .sizes")
        return self.sizes[0]

    @property
    def spacings(self) -> tuple:
        return tuple(L / N for L, N in zip(self.lengths, self.sizes))

    @property
    def h(self) -> float:
        hs = self.spacings
        if max(hs) - min(hs) > 1e-15 * max(hs):
            raise ValueError("grid spacing is not uniform across axes")
        return hs[0]

    @property
    def shape(self) -> tuple:
        """Number of points per axis (``N_i + 1``)."""
        return tuple(N + 1 for N in self.sizes)

    @property
    def n_points(self) -> int:
        return math.prod(self.shape)

    @property
    def strides(self) -> tuple:
        """Flat-index stride of each axis (row-major)."""
        out = []
        s = 1
        for n in reversed(self.shape):
            out.append(s)
            s *= n
        return tuple(reversed(out))

    @property
    def cell_volume(self) -> float:
        """The quadrature weight ``h^d`` (product of spacings on a box)."""
        return math.prod(self.spacings)

    def coordinates(self, axis: int) -> np.ndarray:
        """Flat array with the ``axis`` coordinate of every grid point."""
        ax = np.arange(self.shape[axis]) * self.spacings[axis]
        view = [1] * self.d
        view[axis] = -1
        return np.broadcast_to(ax.reshape(view), self.shape).ravel().copy()

    def outflow_mask(self) -> np.ndarray:
        """Boolean ``(d, n_points)`` mask of flux entries pinned to zero (``x_i = L_i``)."""
        mask = np.zeros((self.d, self.n_points), dtype=bool)
        for i in range(self.d):
            idx = np.arange(self.n_points)
            mask[i] = (idx // self.strides[i]) % self.shape[i] == self.shape[i] - 1
        return mask

    def zeros(self) -> "ScalarField":
        return ScalarField(self, np.zeros(self.n_points))

    def zero_flux(self) -> "FluxField":
        return FluxField(self, np.zeros((self.d, self.n_points)))


def make_grid(d: int, L: Union[float, Sequence[float]] = 1.0,
              N: Union[int, Sequence[int]] = 1) -> Grid:
    """Build a grid on ``[0, L]^d`` split into ``N`` cells per axis."""
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    lengths = _per_axis(L, d, "L", float)
    sizes = _per_axis(N, d, "N", int)
    if any(not (x > 0) or not math.isfinite(x) for x in lengths):
        raise ValueError(f"side lengths must be positive and finite, got {lengths}")
    if any(n < 1 for n in sizes):
        raise ValueError(f"subdivisions must be >= 1, got {sizes}")
    return Grid(d, lengths, sizes)


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        if self.values.size != self.grid.n_points:
            raise ValueError(
                f"scalar field has {self.values.size} values, grid has {self.grid.n_points} points")

    def as_array(self) -> np.ndarray:
        """View of the values shaped like the point lattice."""
        return self.values.reshape(self.grid.shape)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def total(self) -> float:
        """Mass ``sum(values) * h^d``."""
        return float(self.values.sum() * self.grid.cell_volume)


@dataclass
class FluxField:
    """Flux on the grid; component ``i`` is structurally zero where ``x_i = L_i``.

    Writes into the pinned entries go through :meth:`set_component` /
    :meth:`enforce_boundary` and are dropped with a debug record.
    """

    grid: Grid
    values: np.ndarray
    _mask: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim == 1 and self.grid.d == 1:
            v = v.reshape(1, -1)
        if v.shape != (self.grid.d, self.grid.n_points):
            raise ValueError(
                f"flux field shape {v.shape} != {(self.grid.d, self.grid.n_points)}")
        self.values = v
        self._mask = _outflow_mask(self.grid)
        self.enforce_boundary()

    def enforce_boundary(self) -> None:
        pinned = self.values[self._mask]
        if np.any(pinned != 0.0):
            log.debug("dropping %d nonzero outflow flux entries", int(np.count_nonzero(pinned)))
        self.values[self._mask] = 0.0

    def set_component(self, axis: int, values: np.ndarray) -> None:
        self.values[axis] = values
        self.enforce_boundary()

    def as_array(self) -> np.ndarray:
        """View shaped ``(d, *grid.shape)``."""
        return self.values.reshape((self.grid.d,) + self.grid.shape)

    def pointwise_norm(self, p: int = 2) -> np.ndarray:
        _check_p(p)
        if p == 1:
            return np.abs(self.values).sum(axis=0)
        return np.sqrt((self.values ** 2).sum(axis=0))

    def copy(self) -> "FluxField":
        return FluxField(self.grid, self.values)


_MASK_CACHE: dict = {}


def _outflow_mask(grid: Grid) -> np.ndarray:
    mask = _MASK_CACHE.get(grid)
    if mask is None:
        mask = grid.outflow_mask()
        mask.setflags(write=False)
        _MASK_CACHE[grid] = mask
    return mask


def _check_p(p):
    if p not in (1, 2):
        raise ValueError(f"flux norm p must be 1 or 2, got {p!r}")


def _same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def divergence(m: FluxField) -> ScalarField:
    """Discrete divergence with zero-flux boundary.

    Along each axis: ``m_i(x)/h`` on the ``x_i = 0`` face, backward difference
    ``(m_i(x) - m_i(x - h e_i))/h`` inside, and ``-m_i(x - h e_i)/h`` on the
    ``x_i = L_i`` face.
    """
    g = m.grid
    out = _backend.divergence(m.values, g.shape, g.spacings)
    return ScalarField(g, out)


def gradient(u: ScalarField) -> FluxField:
    """Forward-difference gradient, zero on the ``x_i = L_i`` face; equals ``-div^*``."""
    g = u.grid
    out = _backend.gradient(u.values, g.shape, g.spacings)
    return FluxField(g, out)


def inner_h(a, b) -> float:
    """Weighted inner product ``sum_x a(x).b(x) h^d`` for scalar or flux fields."""
    _same_grid(a, b)
    if type(a) is not type(b):
        raise TypeError("inner_h needs two fields of the same kind")
    return float(np.vdot(a.values, b.values) * a.grid.cell_volume)


def norm_h2(a) -> float:
    return math.sqrt(max(inner_h(a, a), 0.0))


def objective_flux(m: FluxField, p: int = 2) -> float:
    """The discrete ``l_{p,1}`` cost ``sum_x |m(x)|_p h^d``."""
    _check_p(p)
    return float(m.pointwise_norm(p).sum() * m.grid.cell_volume)


def objective_source(eta: ScalarField) -> float:
    return float(np.abs(eta.values).sum() * eta.grid.cell_volume)


def operator_norm_bound(grid: Grid, with_source: bool = False) -> float:
    """Upper bound on ``||div^h||^2``: ``sum_i 4/h_i^2`` (``4d/h^2`` on a cube).

    ``with_source`` bounds ``||[div^h, -I]||^2`` instead, which adds one.
    """
    bound = sum(4.0 / hi ** 2 for hi in grid.spacings)
    return bound + 1.0 if with_source else bound


def power_iteration_norm(grid: Grid, with_source: bool = False,
                         iters: int = 500, seed: int = 0) -> float:
    """Estimate ``||K||^2`` by power iteration on ``K K^*``; test oracle only."""
    rng = np.random.default_rng(seed)
    u = ScalarField(grid, rng.standard_normal(grid.n_points))
    est = 0.0
    for _ in range(iters):
        # K K^* u = div(-grad u) (+ u for the source block)
        w = divergence(gradient(u)).values * -1.0
        if with_source:
            w = w + u.values
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        u = ScalarField(grid, w / est)
    return est


def finite_convergence_threshold(grid: Grid) -> float:
    """``d * max_i L_i / 2``: above this weight the discrete source term vanishes."""
    return grid.d * max(grid.lengths) / 2.0
