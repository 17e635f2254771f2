"""Structure-preserving BGK surrogate for the two-species operator.

Both species relax at a single rate toward shares of one mixture
equilibrium: species alpha is pushed toward n_alpha * M(1, u_mix, T_mix).
Because the target is the exact-discrete-moment exponential fit, each cell
conserves species masses, total momentum and total energy to solver
tolerance, and the fixed points are exactly pairs of Maxwellians sharing a
mean velocity and temperature.
"""

from __future__ import annotations

import numpy as np

from segrekin.collision.maxwell import (
    VACUUM_DENSITY,
    discrete_maxwellian_batch,
    moments_batch,
)
from segrekin.domain import SpeciesDistributions, VelocityGrid


def mixture_targets(
    f_r: np.ndarray, f_b: np.ndarray, vgrid: VelocityGrid
) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell relaxation targets (M_r, M_b) sharing (u, T).

    Inputs are slabs of shape (cells..., nodes...); outputs match.  Vacuum
    cells get zero targets (their collision term is zero).
    """
    lead_shape = f_r.shape[: f_r.ndim - vgrid.dim_v]
    cells = int(np.prod(lead_shape)) if lead_shape else 1
    fr = f_r.reshape(cells, vgrid.n_nodes)
    fb = f_b.reshape(cells, vgrid.n_nodes)
    w = vgrid.weight
    n_r = w * fr.sum(axis=1)
    n_b = w * fb.sum(axis=1)
    n_mix, u_mix, t_mix, _ = moments_batch(
        (fr + fb).reshape((cells,) + vgrid.shape), vgrid
    )
    # the batched fit returns zero slices for vacuum cells on its own
    m_mix = discrete_maxwellian_batch(n_mix, u_mix, t_mix, vgrid)
    safe_n = np.where(n_mix < VACUUM_DENSITY, 1.0, n_mix)
    m_r = (n_r / safe_n)[:, None] * m_mix
    m_b = (n_b / safe_n)[:, None] * m_mix
    return (
        m_r.reshape(lead_shape + vgrid.shape),
        m_b.reshape(lead_shape + vgrid.shape),
    )


def bgk_targets(state: SpeciesDistributions) -> tuple[np.ndarray, np.ndarray]:
    return mixture_targets(state.f_r, state.f_b, state.vgrid)


def bgk_relax(
    state: SpeciesDistributions, nu_collision: float
) -> tuple[np.ndarray, np.ndarray]:
    """Collision-term slabs nu_c (n_alpha M(1, u_mix, T_mix) - f_alpha).

    Zero at (and only at) pairs of Maxwellians with common mean velocity
    and temperature; conserves species masses, total momentum and total
    energy exactly per cell.
    """
    if nu_collision <= 0:
        raise ValueError("collision rate must be positive")
    m_r, m_b = bgk_targets(state)
    return (
        nu_collision * (m_r - state.f_r),
        nu_collision * (m_b - state.f_b),
    )
