"""Hydrodynamic solvers: the compressible system with self-consistent
forces (and its inviscid limit) plus the incompressible limit system."""

from segrekin.hydro.vns import (
    UNLIKE_PAIR_FACTOR,
    FluxQ,
    HydroState,
    VnsTendencies,
    compute_Q,
    vns_rhs,
    vns_step,
)
from segrekin.hydro.ins import (
    INSState,
    InsTendencies,
    dispersion_growth_rate,
    ins_rhs,
    ins_step,
    marginal_temperature,
)

__all__ = [
    "FluxQ",
    "HydroState",
    "INSState",
    "InsTendencies",
    "UNLIKE_PAIR_FACTOR",
    "VnsTendencies",
    "compute_Q",
    "dispersion_growth_rate",
    "ins_rhs",
    "ins_step",
    "marginal_temperature",
    "vns_rhs",
    "vns_step",
]
