"""Maxwellian slices, velocity moments, and exact-moment exponential fits.

A sampled Maxwellian reproduces its parameters only up to velocity
truncation error.  Wherever the solvers need conservation to hold to
machine precision (BGK relaxation targets, per-cell equilibria) they use
:func:`discrete_maxwellian`: an exponential exp(a + b.v - c|v|^2) whose
*discrete* moments match the requested (n, u, T) exactly, found by Newton
iteration on (a, b, c).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from segrekin.domain import TruncationWarning, VelocityGrid

VACUUM_DENSITY = 1e-14


@dataclass(frozen=True)
class MaxwellianParams:
    """Density, bulk velocity and temperature of a local equilibrium."""

    n: float
    u: tuple[float, ...]
    T: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("density must be nonnegative")
        if self.T <= 0:
            raise ValueError("temperature must be positive")

    @classmethod
    def resting(cls, n: float, T: float, dim_v: int) -> "MaxwellianParams":
        return cls(n, (0.0,) * dim_v, T)


def maxwellian(p: MaxwellianParams, vgrid: VelocityGrid) -> np.ndarray:
    """Sample n (2 pi T)^(-d/2) exp(-|v - u|^2 / 2T) on the lattice.

    Warns when the bulk speed pushes significant mass past the cutoff
    (|u| beyond v_max - 3 sqrt(T)).
    """
    if len(p.u) != vgrid.dim_v:
        raise ValueError("bulk velocity dimension does not match the grid")
    if max(abs(c) for c in p.u) > vgrid.v_max - 3.0 * np.sqrt(p.T):
        warnings.warn(
            "Maxwellian drifts into the velocity cutoff "
            f"(|u|={max(abs(c) for c in p.u):.3g}, v_max={vgrid.v_max})",
            TruncationWarning,
            stacklevel=2,
        )
    arg = np.zeros(vgrid.shape)
    for a in range(vgrid.dim_v):
        arg = arg + (vgrid.node_component(a) - p.u[a]) ** 2
    norm = p.n * (2.0 * np.pi * p.T) ** (-vgrid.dim_v / 2.0)
    return norm * np.exp(-arg / (2.0 * p.T))


def moments(values: np.ndarray, vgrid: VelocityGrid):
    """Discrete (n, u, T) of one velocity slice.

    Near-vacuum slices (n below 1e-14) return (n, None, None) rather than
    propagating NaNs.
    """
    if values.shape != vgrid.shape:
        raise ValueError("slice shape does not match the velocity grid")
    w = vgrid.weight
    n = float(w * values.sum())
    if n < VACUUM_DENSITY:
        return n, None, None
    u = np.array(
        [float(w * np.sum(vgrid.node_component(a) * values)) / n for a in range(vgrid.dim_v)]
    )
    pec = np.zeros(vgrid.shape)
    for a in range(vgrid.dim_v):
        pec = pec + (vgrid.node_component(a) - u[a]) ** 2
    T = float(w * np.sum(pec * values)) / (vgrid.dim_v * n)
    return n, u, T


def moments_batch(values: np.ndarray, vgrid: VelocityGrid):
    """Vectorized moments for slabs of shape (cells..., nodes...).

    Returns (n, u, T) with spatial shape preserved; vacuum cells carry
    u = 0 and T = 0 plus a boolean mask.
    """
    d = vgrid.dim_v
    lead = values.ndim - d
    vax = tuple(range(lead, values.ndim))
    w = vgrid.weight
    n = w * values.sum(axis=vax)
    vacuum = n < VACUUM_DENSITY
    safe_n = np.where(vacuum, 1.0, n)
    u = np.stack(
        [
            w
            * np.sum(values * _bcast(vgrid.node_component(a), lead), axis=vax)
            / safe_n
            for a in range(d)
        ]
    )
    e2 = w * np.sum(values * _bcast(vgrid.speed_squared(), lead), axis=vax)
    T = (e2 / safe_n - np.sum(u * u, axis=0)) / d
    u = np.where(vacuum, 0.0, u)
    T = np.where(vacuum, 0.0, T)
    return n, u, T, vacuum


def _bcast(varr: np.ndarray, lead: int) -> np.ndarray:
    return varr.reshape((1,) * lead + varr.shape)


def _psi_matrix(vgrid: VelocityGrid) -> np.ndarray:
    """Columns (1, v_1..v_d, |v|^2) on the flattened lattice."""
    nodes = vgrid.nodes()
    d = vgrid.dim_v
    psi = np.empty((nodes.shape[0], d + 2))
    psi[:, 0] = 1.0
    psi[:, 1 : d + 1] = nodes
    psi[:, d + 1] = np.sum(nodes**2, axis=1)
    return psi


def discrete_maxwellian_batch(
    n: np.ndarray,
    u: np.ndarray,
    T: np.ndarray,
    vgrid: VelocityGrid,
    tol: float = 1e-13,
    max_iter: int = 60,
) -> np.ndarray:
    """Exponential slices whose discrete moments equal (n, u, T) exactly.

    ``n`` and ``T`` have shape (cells,), ``u`` shape (dim_v, cells).  Output
    shape is (cells, n_nodes).  Cells flagged as vacuum (n < 1e-14) come
    back identically zero.
    """
    n = np.atleast_1d(np.asarray(n, dtype=float))
    T = np.atleast_1d(np.asarray(T, dtype=float))
    u = np.atleast_2d(np.asarray(u, dtype=float))
    d = vgrid.dim_v
    cells = n.shape[0]
    psi = _psi_matrix(vgrid)
    w = vgrid.weight
    live = (n >= VACUUM_DENSITY) & (T > 0.0)

    out = np.zeros((cells, vgrid.n_nodes))
    if not np.any(live):
        return out

    nl = n[live]
    Tl = T[live]
    ul = u[:, live]

    # targets: Sum w m psi = (n, n u, n (d T + |u|^2))
    target = np.empty((nl.shape[0], d + 2))
    target[:, 0] = nl
    target[:, 1 : d + 1] = (nl * ul).T
    target[:, d + 1] = nl * (d * Tl + np.sum(ul**2, axis=0))

    # analytic start: a = log n - d/2 log(2 pi T) - |u|^2/2T, b = u/T, c = 1/2T
    theta = np.empty((nl.shape[0], d + 2))
    theta[:, 0] = (
        np.log(nl) - 0.5 * d * np.log(2.0 * np.pi * Tl) - np.sum(ul**2, axis=0) / (2.0 * Tl)
    )
    theta[:, 1 : d + 1] = (ul / Tl).T
    theta[:, d + 1] = 1.0 / (2.0 * Tl)

    sign = np.ones(d + 2)
    sign[d + 1] = -1.0  # exponent carries -c |v|^2

    for _ in range(max_iter):
        expo = theta[:, :1] + (theta[:, 1:] * sign[1:]) @ psi[:, 1:].T
        m = np.exp(expo)
        mom = w * m @ psi
        resid = mom - target
        if np.max(np.abs(resid) / np.maximum(target[:, :1], 1e-300)) < tol:
            break
        # Jacobian: d mom_a / d theta_b = w Sum psi_a psi_b m * sign_b
        gram = w * np.einsum("cn,na,nb->cab", m, psi, psi)
        gram = gram * sign[None, None, :]
        delta = np.linalg.solve(gram, resid[..., None])[..., 0]
        # damped update keeps the exponent sane on the first steps
        step = np.clip(delta, -5.0, 5.0)
        theta = theta - step
    else:
        raise RuntimeError(
            "discrete Maxwellian fit did not converge; worst residual "
            f"{np.max(np.abs(resid)):.3e}"
        )

    expo = theta[:, :1] + (theta[:, 1:] * sign[1:]) @ psi[:, 1:].T
    out[live] = np.exp(expo)
    return out


def discrete_maxwellian(
    n: float, u, T: float, vgrid: VelocityGrid
) -> np.ndarray:
    """Single-slice convenience wrapper around the batched exact fit."""
    u = np.asarray(u, dtype=float).reshape(vgrid.dim_v, 1)
    slab = discrete_maxwellian_batch(
        np.array([n]), u, np.array([T]), vgrid
    )
    return slab[0].reshape(vgrid.shape)
