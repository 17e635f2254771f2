"""Mean-field equilibrium theory: phase diagram and interface profiles.

Stationary states are zero-velocity, constant-temperature Maxwellians whose
species densities satisfy

    T log n1 + U * n2 = C1,      T log n2 + U * n1 = C2,

with the shared kernel of the `kac` module.  For the symmetric quench
(C1 = C2) the uniform mixed state n1 = n2 = rho/2 destabilizes below

    T_c(rho) = (rho / 2) Uhat(0),

and the coexisting compositions solve T log((rho+phi)/(rho-phi)) =
Uhat(0) phi.  On a large torus the same fixed-point map, iterated with
damping, produces the kink-antikink interface pair connecting the two
phases; its defect under the stationary equations is the reported
residual.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from segrekin.domain import ScalarField, SpatialGrid
from segrekin.hydro.vns import HydroState
from segrekin.kac import KacKernel, convolve_values


@dataclass(frozen=True)
class PhasePoint:
    """One point of the coexistence diagram."""

    T: float
    rho: float
    phi_star: float

    def __post_init__(self):
        if self.T <= 0 or self.rho <= 0:
            raise ValueError("temperature and density must be positive")
        if not 0.0 <= self.phi_star < self.rho:
            raise ValueError("order parameter must lie in [0, rho)")


@dataclass
class InterfaceProfile:
    grid: SpatialGrid
    n1: ScalarField
    n2: ScalarField
    T: float
    residual: float
    converged: bool = True


def critical_temperature(rho: float, kernel: KacKernel) -> float:
    """Demixing threshold (rho/2) Uhat(0) of the uniform symmetric state."""
    if rho <= 0:
        raise ValueError("density must be positive")
    return 0.5 * rho * kernel.uhat0


def coexistence_order_parameter(T: float, rho: float, kernel: KacKernel) -> float:
    """Composition difference |n1 - n2| of the coexisting phases.

    Zero at and above T_c; below, the nontrivial root of
    T log((rho+phi)/(rho-phi)) = Uhat(0) phi found by bisection (the
    bracket is monotone, so the iteration cannot fail).
    """
    if T <= 0:
        raise ValueError("temperature must be positive")
    t_c = critical_temperature(rho, kernel)
    if T >= t_c:
        return 0.0
    u0 = kernel.uhat0

    def g(phi):
        return T * np.log((rho + phi) / (rho - phi)) - u0 * phi

    lo = rho * 1e-15
    hi = rho * (1.0 - 1e-16)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def stationary_residual(
    n1: ScalarField, n2: ScalarField, T: float, kernel: KacKernel
) -> float:
    """Defect of the stationary equations with the constants taken as the
    field means: max over cells of the summed two-equation defect."""
    for f in (n1, n2):
        if np.any(f.values <= 0.0):
            raise ValueError("densities must be strictly positive")
    r1 = T * np.log(n1.values) + convolve_values(kernel, n2.values)
    r2 = T * np.log(n2.values) + convolve_values(kernel, n1.values)
    c1 = r1.mean()
    c2 = r2.mean()
    return float(np.max(np.abs(r1 - c1) + np.abs(r2 - c2)))


def interface_profile(
    T: float,
    rho: float,
    kernel: KacKernel,
    grid: SpatialGrid,
    init: str = "tanh_seed",
    damping: float = 0.5,
    tol: float = 1e-9,
    max_iter: int = 30000,
    seed_fields: tuple[np.ndarray, np.ndarray] | None = None,
) -> InterfaceProfile:
    """Kink-antikink interface pair on a large 1D torus.

    Damped fixed-point iteration of n_alpha <- exp((C - U * n_beta)/T),
    with C pinned by the coexistence plateau densities.  Needs T < T_c and
    a torus that keeps the two interfaces more than 20 kernel ranges apart.
    ``seed_fields`` overrides the built-in seeds with explicit (n1, n2)
    starting arrays.
    """
    if grid.dim != 1:
        raise ValueError("interface profiles are one-dimensional")
    t_c = critical_temperature(rho, kernel)
    if T >= t_c:
        raise ValueError(f"no interface exists at T={T} >= T_c={t_c}")
    rng = kernel.range_estimate()
    L = grid.extent[0]
    if L < 10.0 * rng:
        raise ValueError("torus must be at least 10 kernel ranges long")
    if 0.5 * L <= 20.0 * rng:
        raise ValueError(
            "kink-antikink separation (half the torus) must exceed 20 kernel "
            f"ranges; need extent > {40.0 * rng}"
        )
    if kernel.grid != grid:
        raise ValueError("kernel must be tabulated on the profile grid")

    phi_star = coexistence_order_parameter(T, rho, kernel)
    n_plus = 0.5 * (rho + phi_star)
    n_minus = 0.5 * (rho - phi_star)
    c_pin = T * np.log(n_plus) + kernel.uhat0 * n_minus

    x = grid.axis_coords(0)
    width = max(2.0 * rng, 6.0 * grid.spacing[0])
    if seed_fields is not None:
        n1 = np.array(seed_fields[0], dtype=float)
        n2 = np.array(seed_fields[1], dtype=float)
        if n1.shape != grid.shape or n2.shape != grid.shape:
            raise ValueError("seed fields must match the grid")
    else:
        if init == "tanh_seed":
            m = np.tanh((x - 0.25 * L) / width) - np.tanh((x - 0.75 * L) / width) - 1.0
        elif init == "step_seed":
            m = np.where((x > 0.25 * L) & (x < 0.75 * L), 1.0, -1.0)
        else:
            raise ValueError(f"unknown seed {init!r}")
        n1 = 0.5 * (rho + phi_star * m)
        n2 = 0.5 * (rho - phi_star * m)

    converged = False
    res = np.inf
    for _ in range(max_iter):
        new1 = np.exp((c_pin - convolve_values(kernel, n2)) / T)
        new2 = np.exp((c_pin - convolve_values(kernel, n1)) / T)
        n1 = (1.0 - damping) * n1 + damping * new1
        n2 = (1.0 - damping) * n2 + damping * new2
        r1 = T * np.log(n1) + convolve_values(kernel, n2) - c_pin
        r2 = T * np.log(n2) + convolve_values(kernel, n1) - c_pin
        res = float(np.max(np.abs(r1) + np.abs(r2)))
        if res < tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"interface iteration stopped at residual {res:.3e} (tol {tol:.1e})",
            RuntimeWarning,
            stacklevel=2,
        )
    prof_n1 = ScalarField(grid, n1)
    prof_n2 = ScalarField(grid, n2)
    return InterfaceProfile(
        grid=grid,
        n1=prof_n1,
        n2=prof_n2,
        T=T,
        residual=stationary_residual(prof_n1, prof_n2, T, kernel),
        converged=converged,
    )


def interface_hydro_state(profile: InterfaceProfile) -> HydroState:
    """Embed the profile as a resting hydrodynamic state.

    rho = n1 + n2, phi = n1 - n2, u = 0, T constant: the configuration on
    which the compressible system's concentration flux vanishes.
    """
    grid = profile.grid
    return HydroState(
        grid,
        profile.n1.values + profile.n2.values,
        np.zeros((grid.dim,) + grid.shape),
        np.full(grid.shape, profile.T),
        profile.n1.values - profile.n2.values,
    )
