"""Collision physics: Maxwellians, exact quadrature, BGK surrogate,
entropy production, linearized operators and transport coefficients."""

from segrekin.collision.maxwell import (
    MaxwellianParams,
    discrete_maxwellian,
    maxwellian,
    moments,
    moments_batch,
)
from segrekin.collision.quadrature import (
    AngularQuadrature,
    CrossSection,
    boltzmann_J,
    collision_invariants,
    invariant_moments,
    symmetrized_collision,
)
from segrekin.collision.bgk import bgk_relax, bgk_targets
from segrekin.collision.entropy import EntropyProduction, entropy_production
from segrekin.collision.linearized import (
    LinearCollisionOperator,
    bgk_linearized,
    build_linearized,
    solve_orthogonal,
)
from segrekin.collision.transport import TransportCoefficients, transport_coefficients

__all__ = [
    "AngularQuadrature",
    "CrossSection",
    "EntropyProduction",
    "LinearCollisionOperator",
    "MaxwellianParams",
    "TransportCoefficients",
    "bgk_linearized",
    "bgk_relax",
    "bgk_targets",
    "boltzmann_J",
    "build_linearized",
    "collision_invariants",
    "discrete_maxwellian",
    "entropy_production",
    "invariant_moments",
    "maxwellian",
    "moments",
    "moments_batch",
    "solve_orthogonal",
    "symmetrized_collision",
    "transport_coefficients",
]
