"""Per-cell entropy production of the collision operators.

The reported numbers are productions, i.e. the negatives of the raw
integrals Sum w J log f, so equilibrium gives zero and the inequalities
read as nonnegativity: N_1 >= 0, N_2 >= 0 and N_cross >= 0 for the *sum*
of the two cross pairings.  The cross pairings are not separately signed,
which is why only their sum is reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segrekin.collision.bgk import bgk_relax
from segrekin.collision.quadrature import (
    AngularQuadrature,
    CrossSection,
    entropy_integrals,
)
from segrekin.domain import SpeciesDistributions

LOG_FLOOR = 1e-300


@dataclass
class EntropyProduction:
    """Productions per spatial cell plus the log-floor activity flags."""

    n_1: np.ndarray
    n_2: np.ndarray
    n_cross: np.ndarray
    floored: np.ndarray  # True where the log floor was active


def entropy_production(
    state: SpeciesDistributions,
    operator: str = "exact_J",
    nu_collision: float | None = None,
    cs: CrossSection | None = None,
    angles: AngularQuadrature | None = None,
) -> EntropyProduction:
    """Entropy productions (N_1, N_2, N_cross) for every spatial cell.

    ``operator`` selects the exact quadrature or the BGK surrogate.  The
    BGK variant has no cross pairing; it reports per-species attributions
    with N_cross = 0, and only their total is sign-guaranteed.
    """
    if np.any(state.f_r < 0.0) or np.any(state.f_b < 0.0):
        raise ValueError("entropy production needs nonnegative distributions")
    grid_shape = state.grid.shape
    vshape = state.vgrid.shape
    cells = int(np.prod(grid_shape))
    fr = state.f_r.reshape((cells,) + vshape)
    fb = state.f_b.reshape((cells,) + vshape)
    floored = np.array(
        [(np.any(fr[c] < LOG_FLOOR) or np.any(fb[c] < LOG_FLOOR)) for c in range(cells)]
    )

    if operator == "exact_J":
        n1 = np.empty(cells)
        n2 = np.empty(cells)
        ncross = np.empty(cells)
        for c in range(cells):
            r11, r22, r12, r21 = entropy_integrals(
                fr[c], fb[c], state.vgrid, cs, angles, floor=LOG_FLOOR
            )
            n1[c] = -r11
            n2[c] = -r22
            ncross[c] = -(r12 + r21)
    elif operator == "bgk":
        if nu_collision is None:
            raise ValueError("the BGK variant needs nu_collision")
        c_r, c_b = bgk_relax(state, nu_collision)
        w = state.vgrid.weight
        vax = tuple(range(1, 1 + state.vgrid.dim_v))
        cr = c_r.reshape((cells,) + vshape)
        cb = c_b.reshape((cells,) + vshape)
        lr = np.log(np.maximum(fr, LOG_FLOOR))
        lb = np.log(np.maximum(fb, LOG_FLOOR))
        n1 = -w * np.sum(cr * lr, axis=vax)
        n2 = -w * np.sum(cb * lb, axis=vax)
        ncross = np.zeros(cells)
    else:
        raise ValueError(f"unknown operator {operator!r}")

    return EntropyProduction(
        n_1=n1.reshape(grid_shape),
        n_2=n2.reshape(grid_shape),
        n_cross=ncross.reshape(grid_shape),
        floored=floored.reshape(grid_shape),
    )
