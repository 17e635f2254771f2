"""Transport coefficients: shear viscosity, heat conductivity, diffusivity.

Two routes.  The closed forms for the single-rate BGK surrogate,

    nu_visc = n T / nu_c,   kappa = (d+2)/2 n T / nu_c,   D = n T / nu_c,

and the operator route, which evaluates the first-order closure integrals
by solving against the discrete linearized operators:

    nu_visc = -T   Sum w A_xy  L^-1(M A_xy),
    kappa   = -T^2 Sum w B_x   L^-1(M B_x),
    D       = -    Sum w vt_x  Gamma^-1(M vt_x),

with vt = v - u, A_ij = (vt_i vt_j - delta_ij vt^2/d)/T and
B_i = (vt^2/2 - (d+2)T/2) vt_i / T^2.  All three are positive because the
operators are negative definite off their null spaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segrekin.collision.linearized import (
    LinearCollisionOperator,
    bgk_linearized,
    build_linearized,
    solve_orthogonal,
)
from segrekin.collision.maxwell import MaxwellianParams, maxwellian
from segrekin.collision.quadrature import AngularQuadrature, CrossSection
from segrekin.domain import BOUNDARY_MASS_TOL, VelocityGrid, boundary_mass_fraction


@dataclass(frozen=True)
class TransportCoefficients:
    nu_visc: float
    kappa: float
    D_diff: float
    method: str

    def __post_init__(self):
        if min(self.nu_visc, self.kappa, self.D_diff) <= 0:
            raise ValueError("transport coefficients must be strictly positive")


def _shear_source(p: MaxwellianParams, vgrid: VelocityGrid) -> np.ndarray:
    vt_x = vgrid.node_component(0) - p.u[0]
    vt_y = vgrid.node_component(1) - p.u[1]
    return (vt_x * vt_y / p.T) * np.ones(vgrid.shape)


def _heat_source(p: MaxwellianParams, vgrid: VelocityGrid) -> np.ndarray:
    d = vgrid.dim_v
    vt2 = np.zeros(vgrid.shape)
    for a in range(d):
        vt2 = vt2 + (vgrid.node_component(a) - p.u[a]) ** 2
    vt_x = vgrid.node_component(0) - p.u[0]
    return (0.5 * vt2 - 0.5 * (d + 2) * p.T) * vt_x / p.T**2 * np.ones(vgrid.shape)


def _diff_source(p: MaxwellianParams, vgrid: VelocityGrid) -> np.ndarray:
    return (vgrid.node_component(0) - p.u[0]) * np.ones(vgrid.shape)


def transport_coefficients(
    method: str,
    p: MaxwellianParams,
    nu_collision: float | None = None,
    vgrid: VelocityGrid | None = None,
    cs: CrossSection | None = None,
    angles: AngularQuadrature | None = None,
    operator_L: LinearCollisionOperator | None = None,
    operator_G: LinearCollisionOperator | None = None,
) -> TransportCoefficients:
    """Transport coefficients at the state (n, u, T).

    ``method='bgk_analytic'`` needs nu_collision and uses the closed forms;
    ``method='numeric_operator'`` solves against the discrete operators,
    either freshly assembled from (vgrid, cs, angles) or injected via
    ``operator_L``/``operator_G``.  Homogeneous in 1/nu_c along the BGK
    route by construction.
    """
    d = len(p.u)
    if method == "bgk_analytic":
        if nu_collision is None or nu_collision <= 0:
            raise ValueError("bgk_analytic needs a positive nu_collision")
        base = p.n * p.T / nu_collision
        return TransportCoefficients(
            nu_visc=base,
            kappa=0.5 * (d + 2) * base,
            D_diff=base,
            method=method,
        )

    if method != "numeric_operator":
        raise ValueError(f"unknown method {method!r}")

    if operator_L is None or operator_G is None:
        if vgrid is None:
            raise ValueError("numeric_operator needs a velocity grid or operators")
        M = maxwellian(p, vgrid)
        if boundary_mass_fraction(M, vgrid) > BOUNDARY_MASS_TOL:
            raise ValueError(
                "velocity cutoff carries too much Maxwellian mass for the "
                "operator route; raise v_max"
            )
        built_L, built_G = build_linearized(p, vgrid, cs, angles)
        operator_L = operator_L or built_L
        operator_G = operator_G or built_G
    vgrid = operator_L.vgrid
    if vgrid.dim_v < 2:
        raise ValueError("operator route needs dim_v >= 2 (shear component)")

    M = operator_L.maxwellian.reshape(vgrid.shape)
    w = vgrid.weight

    a_xy = _shear_source(p, vgrid)
    sol = solve_orthogonal(operator_L, M * a_xy)
    nu_visc = -p.T * w * float(np.sum(a_xy * sol))

    b_x = _heat_source(p, vgrid)
    sol = solve_orthogonal(operator_L, M * b_x)
    kappa = -p.T**2 * w * float(np.sum(b_x * sol))

    vt_x = _diff_source(p, vgrid)
    sol = solve_orthogonal(operator_G, M * vt_x)
    d_diff = -w * float(np.sum(vt_x * sol))

    return TransportCoefficients(
        nu_visc=nu_visc, kappa=kappa, D_diff=d_diff, method=method
    )
