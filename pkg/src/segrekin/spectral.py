"""Periodic derivative helpers shared by the solvers.

Spectral derivatives (exact for resolved modes) and second-order centered
differences, selectable where a module offers the choice.
"""

from __future__ import annotations

import numpy as np

from segrekin.domain import SpatialGrid


def grad_values(values: np.ndarray, grid: SpatialGrid, method: str = "spectral") -> np.ndarray:
    """Gradient of a scalar field, shape (dim, *cells)."""
    out = np.empty((grid.dim,) + grid.shape)
    if method == "spectral":
        vhat = np.fft.fftn(values)
        for a, k in enumerate(grid.wavenumbers()):
            out[a] = np.fft.ifftn(1j * k * vhat).real
    elif method == "centered":
        for a in range(grid.dim):
            dx = grid.spacing[a]
            out[a] = (np.roll(values, -1, axis=a) - np.roll(values, 1, axis=a)) / (2 * dx)
    else:
        raise ValueError(f"unknown derivative method {method!r}")
    return out


def div_values(vec: np.ndarray, grid: SpatialGrid, method: str = "spectral") -> np.ndarray:
    """Divergence of a vector field of shape (dim, *cells)."""
    out = np.zeros(grid.shape)
    if method == "spectral":
        for a, k in enumerate(grid.wavenumbers()):
            out += np.fft.ifftn(1j * k * np.fft.fftn(vec[a])).real
    elif method == "centered":
        for a in range(grid.dim):
            dx = grid.spacing[a]
            out += (np.roll(vec[a], -1, axis=a) - np.roll(vec[a], 1, axis=a)) / (2 * dx)
    else:
        raise ValueError(f"unknown derivative method {method!r}")
    return out


def laplacian_values(values: np.ndarray, grid: SpatialGrid, method: str = "spectral") -> np.ndarray:
    if method == "spectral":
        k2 = sum(k**2 for k in grid.wavenumbers())
        return -np.fft.ifftn(k2 * np.fft.fftn(values)).real
    if method == "centered":
        out = np.zeros(grid.shape)
        for a in range(grid.dim):
            dx2 = grid.spacing[a] ** 2
            out += (
                np.roll(values, -1, axis=a) - 2 * values + np.roll(values, 1, axis=a)
            ) / dx2
        return out
    raise ValueError(f"unknown derivative method {method!r}")
