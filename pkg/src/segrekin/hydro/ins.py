"""Incompressible limit: divergence-free flow coupled to the concentration.

Reduced system (constant background density and temperature):

    du/dt + u.grad u = -grad p + nu Lap u + phi W / rho_bar
    dphi/dt + u.grad phi = D [ Lap phi / rho_bar - Lap(U_eff * phi) / T_bar ]
    W = grad(U_eff * phi),    div u = 0,

with U_eff = U/2 because the fields are species sums (same convention as
the compressible module).  The full variant also carries a background
density perturbation and a temperature deviation theta with its u.F
forcing, and reports the gradient constraint on rho + theta + U_eff * rho
as a diagnostic defect instead of enforcing it.

The concentration's linear part is diagonal in Fourier space with
multiplier

    lambda(k) = -D |k|^2 (1/rho_bar - Uhat_eff(k)/T_bar),

positive below the demixing threshold T_bar = rho_bar Uhat_eff(k); the
stepper integrates that part exactly, so measured mode growth matches
:func:`dispersion_growth_rate` by construction up to the (tiny) advective
coupling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from segrekin.domain import SpatialGrid
from segrekin.hydro.vns import UNLIKE_PAIR_FACTOR
from segrekin.kac import KacKernel, convolve_values, grad_convolve_values
from segrekin.spectral import div_values, grad_values, laplacian_values

DIV_TOL = 1e-8
CFL_ADVECTIVE = 0.5


@dataclass
class INSState:
    grid: SpatialGrid
    u: np.ndarray  # (dim, *cells), divergence-free
    phi: np.ndarray
    rho_bar: float
    T_bar: float
    theta: np.ndarray | None = None
    rho: np.ndarray | None = None  # full variant: density perturbation
    p: np.ndarray = field(default=None)  # type: ignore[assignment]
    time: float = 0.0

    def __post_init__(self):
        shape = self.grid.shape
        self.u = np.asarray(self.u, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        if self.u.shape != (self.grid.dim,) + shape:
            raise ValueError("velocity must have shape (dim, *cells)")
        if self.phi.shape != shape:
            raise ValueError("phi must match the grid shape")
        if self.rho_bar <= 0 or self.T_bar <= 0:
            raise ValueError("background density and temperature must be positive")
        if self.p is None:
            self.p = np.zeros(shape)

    def divergence_defect(self) -> float:
        return float(np.max(np.abs(div_values(self.u, self.grid))))


def _check_divergence(state: INSState):
    kmax = max(
        np.pi / dx for dx in state.grid.spacing
    )
    scale = max(float(np.max(np.abs(state.u))), 1e-30) * kmax
    if state.divergence_defect() > DIV_TOL * scale + 1e-14:
        raise ValueError(
            f"velocity is not divergence-free (defect {state.divergence_defect():.3e})"
        )


def phi_multipliers(
    kernel: KacKernel, rho_bar: float, T_bar: float, D_diff: float
) -> np.ndarray:
    """lambda(k) = -D |k|^2 (1/rho_bar - Uhat_eff(k)/T_bar) on the k-lattice."""
    grid = kernel.grid
    k2 = sum(k**2 for k in grid.wavenumbers())
    ueff = UNLIKE_PAIR_FACTOR * kernel.fourier_multipliers
    return -D_diff * k2 * (1.0 / rho_bar - ueff / T_bar)


def dispersion_growth_rate(
    k_mode, rho_bar: float, T_bar: float, D_diff: float, kernel: KacKernel
) -> float:
    """Growth rate of one concentration mode; positive means demixing.

    ``k_mode`` is an integer lattice mode (one int per axis); the value is
    read off the same multiplier table the stepper integrates, so the two
    agree exactly.
    """
    if np.isscalar(k_mode):
        k_mode = (int(k_mode),)
    lam = phi_multipliers(kernel, rho_bar, T_bar, D_diff)
    idx = tuple(int(m) % n for m, n in zip(k_mode, kernel.grid.cells))
    return float(lam[idx])


def marginal_temperature(kernel: KacKernel, k_mode, rho_bar: float) -> float:
    """Background temperature at which the mode's growth rate changes sign."""
    if np.isscalar(k_mode):
        k_mode = (int(k_mode),)
    return rho_bar * UNLIKE_PAIR_FACTOR * kernel.multiplier_at(tuple(k_mode))


@dataclass
class InsTendencies:
    u_t: np.ndarray
    phi_t: np.ndarray
    theta_t: np.ndarray | None
    pressure: np.ndarray
    constraint_defect: float | None


def _advect_div_form(u: np.ndarray, scalar: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """-div(u * scalar); conserves the mean exactly (flux form)."""
    return -div_values(u * scalar[None], grid)


def _project(vec_hat: np.ndarray, grid: SpatialGrid):
    """Leray projection in Fourier space; returns (projected, potential_hat).

    The removed part is grad(chi) with chi_hat = -div_hat / |k|^2, so the
    projected field has exactly zero discrete divergence.
    """
    ks = grid.wavenumbers()
    k2 = sum(k**2 for k in ks)
    k2 = np.where(k2 == 0.0, 1.0, k2)
    div_hat = sum(1j * ks[a] * vec_hat[a] for a in range(grid.dim))
    chi_hat = -div_hat / k2
    out = np.empty_like(vec_hat)
    for a in range(grid.dim):
        out[a] = vec_hat[a] - 1j * ks[a] * chi_hat
    return out, chi_hat


def ins_rhs(
    state: INSState,
    kernel: KacKernel,
    nu_visc: float,
    kappa: float,
    D_diff: float,
    variant: str = "reduced",
) -> InsTendencies:
    """Tendencies of the incompressible system (velocity part projected)."""
    _check_divergence(state)
    if kernel.grid != state.grid:
        raise ValueError("kernel and state grids differ")
    grid = state.grid
    dim = grid.dim
    u, phi = state.u, state.phi

    w_force = UNLIKE_PAIR_FACTOR * grad_convolve_values(kernel, phi)
    raw = np.empty_like(u)
    for a in range(dim):
        raw[a] = (
            _advect_div_form(u, u[a], grid)
            + nu_visc * laplacian_values(u[a], grid)
            + phi * w_force[a] / state.rho_bar
        )
    constraint = None
    theta_t = None
    if variant == "full":
        if state.rho is None or state.theta is None:
            raise ValueError("full variant needs rho and theta fields")
        f_force = -UNLIKE_PAIR_FACTOR * grad_convolve_values(kernel, state.rho)
        for a in range(dim):
            raw[a] += state.rho * f_force[a] / state.rho_bar
        u_dot_f = sum(u[a] * f_force[a] for a in range(dim))
        theta_t = (
            _advect_div_form(u, state.theta, grid)
            + u_dot_f
            + kappa * laplacian_values(state.theta, grid)
        )
        constraint_field = grad_values(
            state.rho + state.theta
            + UNLIKE_PAIR_FACTOR * convolve_values(kernel, state.rho),
            grid,
        )
        constraint = float(np.max(np.abs(constraint_field)))
    elif variant != "reduced":
        raise ValueError(f"unknown variant {variant!r}")

    raw_hat = np.stack([np.fft.fftn(raw[a]) for a in range(dim)])
    proj_hat, chi_hat = _project(raw_hat, grid)
    u_t = np.stack([np.fft.ifftn(proj_hat[a]).real for a in range(dim)])
    pressure = np.fft.ifftn(chi_hat).real

    lam = phi_multipliers(kernel, state.rho_bar, state.T_bar, D_diff)
    phi_lin = np.fft.ifftn(lam * np.fft.fftn(phi)).real
    phi_t = _advect_div_form(u, phi, grid) + phi_lin

    return InsTendencies(
        u_t=u_t, phi_t=phi_t, theta_t=theta_t, pressure=pressure,
        constraint_defect=constraint,
    )


def admissible_dt_ins(state: INSState) -> float:
    kmax = max(np.pi / dx for dx in state.grid.spacing)
    umax = float(np.max(np.abs(state.u)))
    return CFL_ADVECTIVE / max(umax * kmax, 1e-300)


def ins_step(
    state: INSState,
    kernel: KacKernel,
    nu_visc: float,
    kappa: float,
    D_diff: float,
    dt: float,
) -> INSState:
    """Semi-implicit step: explicit advection and forces, exact integrating
    factor for the diffusive/linear parts, then pressure projection.

    The projection re-establishes div u = 0 to roundoff; the concentration
    mean is conserved exactly (its advection is in flux form and the linear
    multiplier vanishes at k = 0).
    """
    adm = admissible_dt_ins(state)
    if dt > adm:
        raise ValueError(f"dt={dt:.3e} exceeds the admissible {adm:.3e}")
    _check_divergence(state)
    grid = state.grid
    dim = grid.dim
    u, phi = state.u, state.phi
    k2 = sum(k**2 for k in grid.wavenumbers())

    w_force = UNLIKE_PAIR_FACTOR * grad_convolve_values(kernel, phi)
    adv = np.empty_like(u)
    for a in range(dim):
        adv[a] = _advect_div_form(u, u[a], grid) + phi * w_force[a] / state.rho_bar
    full = state.rho is not None and state.theta is not None
    if full:
        f_force = -UNLIKE_PAIR_FACTOR * grad_convolve_values(kernel, state.rho)
        for a in range(dim):
            adv[a] += state.rho * f_force[a] / state.rho_bar

    visc_factor = np.exp(-nu_visc * k2 * dt)
    star_hat = np.stack(
        [(np.fft.fftn(u[a]) + dt * np.fft.fftn(adv[a])) * visc_factor for a in range(dim)]
    )
    proj_hat, chi_hat = _project(star_hat, grid)
    u_new = np.stack([np.fft.ifftn(proj_hat[a]).real for a in range(dim)])
    pressure = np.fft.ifftn(chi_hat).real / dt

    lam = phi_multipliers(kernel, state.rho_bar, state.T_bar, D_diff)
    adv_phi = _advect_div_form(u, phi, grid)
    phi_new = np.fft.ifftn(
        (np.fft.fftn(phi) + dt * np.fft.fftn(adv_phi)) * np.exp(lam * dt)
    ).real

    theta_new = None
    rho_new = state.rho
    if full:
        u_dot_f = sum(u[a] * f_force[a] for a in range(dim))
        adv_th = _advect_div_form(u, state.theta, grid) + u_dot_f
        theta_new = np.fft.ifftn(
            (np.fft.fftn(state.theta) + dt * np.fft.fftn(adv_th))
            * np.exp(-kappa * k2 * dt)
        ).real

    return INSState(
        grid=grid,
        u=u_new,
        phi=phi_new,
        rho_bar=state.rho_bar,
        T_bar=state.T_bar,
        theta=theta_new,
        rho=rho_new,
        p=pressure,
        time=state.time + dt,
    )
