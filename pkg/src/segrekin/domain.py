"""Periodic spatial grids, truncated velocity lattices and field containers.

All solvers share these containers.  Spatial grids are periodic tori in one
or two dimensions; velocity grids are uniform midpoint lattices truncated at
a cutoff speed, symmetric under v -> -v so odd moments of even functions
vanish by exact pairing of nodes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


class TruncationWarning(UserWarning):
    """Velocity-space truncation is carrying non-negligible mass."""


# fraction of total mass allowed on boundary velocity nodes before warning
BOUNDARY_MASS_TOL = 1e-8


def _as_tuple(value, dim, name):
    if np.isscalar(value):
        return (value,) * dim
    value = tuple(value)
    if len(value) != dim:
        raise ValueError(f"{name} must be a scalar or length-{dim} sequence")
    return value


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid on a torus of side ``extent`` per axis.

    Cell centers sit at ``i * spacing``; index arithmetic wraps modulo
    ``cells``.
    """

    dim: int
    extent: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("spatial dim must be 1 or 2")
        if len(self.extent) != self.dim or len(self.cells) != self.dim:
            raise ValueError("extent/cells must match dim")
        if any(L <= 0 for L in self.extent):
            raise ValueError("extent must be positive")
        if any(n < 4 for n in self.cells):
            raise ValueError("need at least 4 cells per axis")

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.extent, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    def axis_coords(self, axis: int) -> np.ndarray:
        dx = self.spacing[axis]
        return dx * np.arange(self.cells[axis])

    def coords(self) -> list[np.ndarray]:
        """Meshgrid ('ij') of cell-center coordinates, one array per axis."""
        axes = [self.axis_coords(a) for a in range(self.dim)]
        return list(np.meshgrid(*axes, indexing="ij"))

    def wavenumbers(self) -> list[np.ndarray]:
        """Angular wavenumbers 2*pi*m/L per axis, broadcastable to shape."""
        ks = []
        for a in range(self.dim):
            k = 2.0 * np.pi * np.fft.fftfreq(self.cells[a], d=self.spacing[a])
            shape = [1] * self.dim
            shape[a] = self.cells[a]
            ks.append(k.reshape(shape))
        return ks


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform midpoint velocity lattice on [-v_max, v_max]^dim_v.

    Node count per axis is even, so nodes sit at +-(k + 1/2)*dv and the
    lattice maps onto itself under v -> -v with no node at the origin.
    """

    dim_v: int
    v_max: float
    nodes_per_axis: int

    def __post_init__(self):
        if self.dim_v not in (1, 2, 3):
            raise ValueError("velocity dim must be 1, 2 or 3")
        if self.v_max <= 0:
            raise ValueError("v_max must be positive")
        if self.nodes_per_axis % 2 != 0:
            raise ValueError(
                "nodes_per_axis must be even (odd counts break v -> -v symmetry)"
            )
        if self.nodes_per_axis < 8:
            raise ValueError("need at least 8 velocity nodes per axis")

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / self.nodes_per_axis

    @property
    def weight(self) -> float:
        """Midpoint quadrature weight per node, dv^dim_v."""
        return self.dv**self.dim_v

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes_per_axis,) * self.dim_v

    @property
    def n_nodes(self) -> int:
        return self.nodes_per_axis**self.dim_v

    def axis_nodes(self) -> np.ndarray:
        n = self.nodes_per_axis
        return (np.arange(n) - (n - 1) / 2.0) * self.dv

    def node_component(self, axis: int) -> np.ndarray:
        """Velocity component along ``axis`` broadcastable to shape."""
        v = self.axis_nodes()
        shape = [1] * self.dim_v
        shape[axis] = self.nodes_per_axis
        return v.reshape(shape)

    def nodes(self) -> np.ndarray:
        """All lattice nodes, shape (n_nodes, dim_v)."""
        axes = [self.axis_nodes()] * self.dim_v
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def speed_squared(self) -> np.ndarray:
        s = np.zeros(self.shape)
        for a in range(self.dim_v):
            s = s + self.node_component(a) ** 2
        return s

    def boundary_mask(self) -> np.ndarray:
        """True on nodes touching the truncation boundary."""
        n = self.nodes_per_axis
        mask = np.zeros(self.shape, dtype=bool)
        for a in range(self.dim_v):
            idx = [slice(None)] * self.dim_v
            idx[a] = 0
            mask[tuple(idx)] = True
            idx[a] = n - 1
            mask[tuple(idx)] = True
        return mask


def boundary_mass_fraction(values: np.ndarray, vgrid: VelocityGrid) -> float:
    """Fraction of total mass on boundary velocity nodes.

    ``values`` may carry leading spatial axes; the velocity axes are the
    trailing ``dim_v`` ones.
    """
    mask = vgrid.boundary_mask()
    total = float(np.sum(values))
    if total <= 0.0:
        return 0.0
    lead = values.ndim - vgrid.dim_v
    bnd = float(np.sum(values * mask.reshape((1,) * lead + mask.shape)))
    return bnd / total


def warn_if_truncated(values: np.ndarray, vgrid: VelocityGrid, context: str = "") -> float:
    frac = boundary_mass_fraction(values, vgrid)
    if frac > BOUNDARY_MASS_TOL:
        warnings.warn(
            f"{context or 'distribution'}: boundary velocity nodes hold "
            f"{frac:.2e} of total mass (cutoff v_max={vgrid.v_max} too small?)",
            TruncationWarning,
            stacklevel=3,
        )
    return frac


@dataclass
class ScalarField:
    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} != grid shape {self.grid.shape}"
            )

    def integral(self) -> float:
        return float(np.sum(self.values)) * self.grid.cell_volume

    @classmethod
    def constant(cls, grid: SpatialGrid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))


@dataclass
class VectorField:
    grid: SpatialGrid
    values: np.ndarray  # shape (dim, *cells)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.grid.dim,) + self.grid.shape
        if self.values.shape != expected:
            raise ValueError(
                f"vector field shape {self.values.shape} != {expected}"
            )

    def component(self, axis: int) -> np.ndarray:
        return self.values[axis]

    @classmethod
    def zeros(cls, grid: SpatialGrid) -> "VectorField":
        return cls(grid, np.zeros((grid.dim,) + grid.shape))


@dataclass
class SpeciesDistributions:
    """Discrete phase-space densities of the two species.

    ``f_r`` and ``f_b`` have shape spatial cells x velocity nodes and are
    nonnegative; the half-sum f and half-difference of the pair then satisfy
    |difference| <= sum pointwise automatically.
    """

    grid: SpatialGrid
    vgrid: VelocityGrid
    f_r: np.ndarray
    f_b: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        expected = self.grid.shape + self.vgrid.shape
        self.f_r = np.asarray(self.f_r, dtype=float)
        self.f_b = np.asarray(self.f_b, dtype=float)
        for name, arr in (("f_r", self.f_r), ("f_b", self.f_b)):
            if arr.shape != expected:
                raise ValueError(f"{name} shape {arr.shape} != {expected}")
        if self.check:
            if np.any(self.f_r < 0.0) or np.any(self.f_b < 0.0):
                raise ValueError("species distributions must be nonnegative")

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.grid.shape))

    def densities(self) -> tuple[np.ndarray, np.ndarray]:
        """Spatial number densities (n_r, n_b)."""
        vax = tuple(range(self.grid.dim, self.grid.dim + self.vgrid.dim_v))
        w = self.vgrid.weight
        return w * self.f_r.sum(axis=vax), w * self.f_b.sum(axis=vax)

    def copy(self) -> "SpeciesDistributions":
        return SpeciesDistributions(
            self.grid, self.vgrid, self.f_r.copy(), self.f_b.copy(), check=False
        )


@dataclass(frozen=True)
class GridSpec:
    """Configuration for :func:`make_grids`."""

    dim: int = 1
    extent: float | tuple[float, ...] = 1.0
    cells: int | tuple[int, ...] = 64
    dim_v: int = 1
    v_max: float = 6.0
    nodes_per_axis: int = 32


def make_grids(spec: GridSpec) -> tuple[SpatialGrid, VelocityGrid]:
    """Build the spatial torus and the velocity lattice from a spec.

    Rejects odd velocity node counts (they break the v -> -v pairing) and
    non-positive extents.
    """
    extent = _as_tuple(spec.extent, spec.dim, "extent")
    cells = _as_tuple(spec.cells, spec.dim, "cells")
    grid = SpatialGrid(spec.dim, tuple(float(L) for L in extent), tuple(int(n) for n in cells))
    vgrid = VelocityGrid(spec.dim_v, float(spec.v_max), int(spec.nodes_per_axis))
    return grid, vgrid
