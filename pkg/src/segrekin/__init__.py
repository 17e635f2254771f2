"""Two-species kinetic model of a segregating binary fluid.

Periodic-torus solvers for the coupled red/blue kinetic equations with a
long-range repulsion between unlike species, the derived compressible and
incompressible hydrodynamic systems, and the mean-field equilibrium theory
(phase diagram, interface profiles).
"""

__version__ = "0.1.0"

from segrekin.domain import (
    GridSpec,
    ScalarField,
    SpatialGrid,
    SpeciesDistributions,
    TruncationWarning,
    VectorField,
    VelocityGrid,
    make_grids,
)
from segrekin.kac import KacKernel, PotentialSpec, convolve, forces, tabulate_kernel

__all__ = [
    "GridSpec",
    "KacKernel",
    "PotentialSpec",
    "ScalarField",
    "SpatialGrid",
    "SpeciesDistributions",
    "TruncationWarning",
    "VectorField",
    "VelocityGrid",
    "convolve",
    "forces",
    "make_grids",
    "tabulate_kernel",
    "__version__",
]
