"""Compressible hydrodynamics with the self-consistent long-range force.

State fields are species sums: rho = n_r + n_b, phi = n_r - n_b.  In these
variables each unlike pair is counted twice, so every mean-field term
carries the kernel at half amplitude (UNLIKE_PAIR_FACTOR); the convolution
force in the equations below is

    Kf[g] = -grad(U_eff * g),   U_eff = U / 2.

With eps = 0 the system is the inviscid (Euler-level) one; eps > 0 adds
the dissipative corrections: stress sigma, heat flux kappa grad T, and the
concentration flux

    Q = grad(phi / rho) + (rho^2 - phi^2) / (rho^2 T) Kf[phi],

which vanishes identically on the mean-field equilibrium profiles, making
those profiles stationary states of the full system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segrekin.domain import ScalarField, SpatialGrid
from segrekin.kac import KacKernel, grad_convolve_values
from segrekin.collision.transport import TransportCoefficients
from segrekin.spectral import div_values, grad_values, laplacian_values

# species-sum fields count each unlike pair twice; mean-field terms at this
# level therefore use the pair kernel at half amplitude
UNLIKE_PAIR_FACTOR = 0.5

GAS_GAMMA = 5.0 / 3.0  # monatomic, 3D internal energy e = (3/2) T

CFL_ADVECTIVE = 0.4
CFL_DIFFUSIVE = 0.25
MAX_HALVINGS = 3


@dataclass
class HydroState:
    """Fields (rho, u, T, phi) on the torus; P = rho T derived."""

    grid: SpatialGrid
    rho: np.ndarray
    u: np.ndarray  # (dim, *cells)
    T: np.ndarray
    phi: np.ndarray
    check: bool = True

    def __post_init__(self):
        shape = self.grid.shape
        self.rho = np.asarray(self.rho, dtype=float)
        self.T = np.asarray(self.T, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.rho.shape != shape or self.T.shape != shape or self.phi.shape != shape:
            raise ValueError("scalar fields must match the grid shape")
        if self.u.shape != (self.grid.dim,) + shape:
            raise ValueError("velocity must have shape (dim, *cells)")
        if self.check:
            validate_positivity(self)

    @property
    def pressure(self) -> np.ndarray:
        return self.rho * self.T

    def sound_speed(self) -> np.ndarray:
        return np.sqrt(GAS_GAMMA * self.T)

    def copy(self) -> "HydroState":
        return HydroState(
            self.grid, self.rho.copy(), self.u.copy(), self.T.copy(),
            self.phi.copy(), check=False,
        )


def validate_positivity(state: HydroState):
    if np.any(state.rho <= 0.0):
        raise ValueError("density must stay positive")
    if np.any(state.T <= 0.0):
        raise ValueError("temperature must stay positive")
    if np.any(np.abs(state.phi) > state.rho * (1 + 1e-12) + 1e-300):
        raise ValueError("|phi| must not exceed rho")


@dataclass
class FluxQ:
    q: np.ndarray  # (dim, *cells)


def kac_force_term(kernel: KacKernel, values: np.ndarray) -> np.ndarray:
    """Kf[g] = -grad(U_eff * g) at the species-sum level, shape (dim, *cells)."""
    return -UNLIKE_PAIR_FACTOR * grad_convolve_values(kernel, values)


def compute_Q(state: HydroState, kernel: KacKernel, gradients: str = "spectral") -> FluxQ:
    """Concentration flux Q = grad(phi/rho) + (rho^2-phi^2)/(rho^2 T) Kf[phi]."""
    validate_positivity(state)
    if kernel.grid != state.grid:
        raise ValueError("kernel and state grids differ")
    g = grad_values(state.phi / state.rho, state.grid, gradients)
    kphi = kac_force_term(kernel, state.phi)
    coef = (state.rho**2 - state.phi**2) / (state.rho**2 * state.T)
    return FluxQ(q=g + coef * kphi)


@dataclass
class VnsTendencies:
    rho_t: np.ndarray
    u_t: np.ndarray
    T_t: np.ndarray
    phi_t: np.ndarray


def _stress(u: np.ndarray, grid: SpatialGrid, nu_visc: float, gradients: str) -> np.ndarray:
    """sigma = -nu (grad u + grad u^T - (2/3) I div u), shape (dim, dim, *cells)."""
    dim = grid.dim
    du = np.empty((dim, dim) + grid.shape)
    for j in range(dim):
        du[:, j] = grad_values(u[j], grid, gradients)  # du[i, j] = d_i u_j
    divu = np.trace(du, axis1=0, axis2=1)
    sigma = -(nu_visc) * (du + np.swapaxes(du, 0, 1))
    for i in range(dim):
        sigma[i, i] += nu_visc * (2.0 / 3.0) * divu
    return sigma


def vns_rhs(
    state: HydroState,
    kernel: KacKernel,
    coeffs: TransportCoefficients | None,
    eps: float,
    gradients: str = "spectral",
) -> VnsTendencies:
    """Time derivatives of (rho, u, T, phi).

    eps = 0 selects the inviscid (Euler-level) system and ignores the
    transport coefficients; eps > 0 requires them.
    """
    validate_positivity(state)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps > 0 and coeffs is None:
        raise ValueError("dissipative terms need transport coefficients")
    grid = state.grid
    dim = grid.dim
    rho, u, T, phi = state.rho, state.u, state.T, state.phi
    P = rho * T

    grad_p = grad_values(P, grid, gradients)
    divu = div_values(u, grid, gradients)
    krho = kac_force_term(kernel, rho)
    kphi = kac_force_term(kernel, phi)

    def u_dot_grad(f):
        g = grad_values(f, grid, gradients)
        return sum(u[a] * g[a] for a in range(dim))

    rho_t = -div_values(rho * u, grid, gradients)
    phi_t = -div_values(phi * u, grid, gradients)

    force = rho * krho - phi * kphi - grad_p
    u_t = np.empty_like(u)
    for a in range(dim):
        u_t[a] = -u_dot_grad(u[a]) + force[a] / rho

    T_t = -u_dot_grad(T) - (2.0 / 3.0) * T * divu

    if eps > 0:
        q = compute_Q(state, kernel, gradients).q
        dq = eps * coeffs.D_diff * div_values(q, grid, gradients)
        phi_t += dq
        sigma = _stress(u, grid, coeffs.nu_visc, gradients)
        div_sigma = np.empty_like(u)
        for j in range(dim):
            div_sigma[j] = div_values(sigma[:, j], grid, gradients)
        for a in range(dim):
            u_t[a] -= eps * div_sigma[a] / rho
        du = np.empty((dim, dim) + grid.shape)
        for j in range(dim):
            du[:, j] = grad_values(u[j], grid, gradients)
        sigma_du = np.sum(sigma * du, axis=(0, 1))
        heat = div_values(
            coeffs.kappa * grad_values(T, grid, gradients), grid, gradients
        )
        work = sum(kphi[a] * coeffs.D_diff * q[a] for a in range(dim))
        T_t += eps * (heat - sigma_du - work) / (1.5 * rho)

    return VnsTendencies(rho_t=rho_t, u_t=u_t, T_t=T_t, phi_t=phi_t)


# ---------------------------------------------------------------------------
# finite-volume step on the conservative variables (rho, m, e, phi)
# ---------------------------------------------------------------------------


def _primitives(cons: np.ndarray, dim: int):
    rho = cons[0]
    m = cons[1 : 1 + dim]
    e = cons[1 + dim]
    phi = cons[2 + dim]
    u = m / rho
    T = (2.0 / 3.0) * (e / rho)
    return rho, u, T, phi


def _to_conservative(state: HydroState) -> np.ndarray:
    dim = state.grid.dim
    cons = np.empty((dim + 3,) + state.grid.shape)
    cons[0] = state.rho
    cons[1 : 1 + dim] = state.rho * state.u
    cons[1 + dim] = 1.5 * state.rho * state.T
    cons[2 + dim] = state.phi
    return cons


def _from_conservative(cons: np.ndarray, grid: SpatialGrid, check=True) -> HydroState:
    rho, u, T, phi = _primitives(cons, grid.dim)
    return HydroState(grid, rho, u, T, phi, check=check)


def _axis_flux(cons: np.ndarray, axis: int, dim: int) -> np.ndarray:
    rho, u, T, phi = _primitives(cons, dim)
    P = rho * T
    ua = u[axis]
    flux = np.empty_like(cons)
    flux[0] = rho * ua
    for b in range(dim):
        flux[1 + b] = rho * u[b] * ua
    flux[1 + axis] += P
    flux[1 + dim] = 1.5 * rho * T * ua
    flux[2 + dim] = phi * ua
    return flux


def _rusanov_divergence(cons: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """- div of the advective flux, central-linear reconstruction + Rusanov.

    The jump the dissipation sees is third order on smooth data, so the
    scheme is second order while staying robust.
    """
    dim = grid.dim
    out = np.zeros_like(cons)
    for axis in range(dim):
        ax = axis + 1  # conserved array axis for this direction
        up1 = np.roll(cons, -1, axis=ax)
        um1 = np.roll(cons, 1, axis=ax)
        up2 = np.roll(cons, -2, axis=ax)
        # face i+1/2: left state from cell i, right state from cell i+1
        w_l = cons + 0.25 * (up1 - um1)
        w_r = up1 - 0.25 * (up2 - cons)
        f_l = _axis_flux(w_l, axis, dim)
        f_r = _axis_flux(w_r, axis, dim)
        rho_l, u_l, T_l, _ = _primitives(w_l, dim)
        rho_r, u_r, T_r, _ = _primitives(w_r, dim)
        alpha = np.maximum(
            np.abs(u_l[axis]) + np.sqrt(GAS_GAMMA * np.abs(T_l)),
            np.abs(u_r[axis]) + np.sqrt(GAS_GAMMA * np.abs(T_r)),
        )
        face = 0.5 * (f_l + f_r) - 0.5 * alpha * (w_r - w_l)
        dx = grid.spacing[axis]
        out -= (face - np.roll(face, 1, axis=ax)) / dx
    return out


def _step_sources(
    cons: np.ndarray,
    grid: SpatialGrid,
    kernel: KacKernel,
    coeffs: TransportCoefficients | None,
    eps: float,
    gradients: str,
) -> np.ndarray:
    dim = grid.dim
    rho, u, T, phi = _primitives(cons, dim)
    P = rho * T
    src = np.zeros_like(cons)
    krho = kac_force_term(kernel, rho)
    kphi = kac_force_term(kernel, phi)
    for a in range(dim):
        src[1 + a] = rho * krho[a] - phi * kphi[a]
    divu = div_values(u, grid, gradients)
    src[1 + dim] = -P * divu
    if eps > 0:
        state = HydroState(grid, rho, u, T, phi, check=False)
        q = compute_Q(state, kernel, gradients).q
        src[2 + dim] += eps * coeffs.D_diff * div_values(q, grid, gradients)
        sigma = _stress(u, grid, coeffs.nu_visc, gradients)
        for j in range(dim):
            src[1 + j] -= eps * div_values(sigma[:, j], grid, gradients)
        du = np.empty((dim, dim) + grid.shape)
        for j in range(dim):
            du[:, j] = grad_values(u[j], grid, gradients)
        src[1 + dim] += eps * (
            div_values(coeffs.kappa * grad_values(T, grid, gradients), grid, gradients)
            - np.sum(sigma * du, axis=(0, 1))
            - sum(kphi[a] * coeffs.D_diff * q[a] for a in range(dim))
        )
    return src


def admissible_dt(state: HydroState, coeffs: TransportCoefficients | None, eps: float) -> float:
    """Advective CFL bound plus the diffusive bound when eps > 0."""
    c = state.sound_speed()
    speed = max(
        float(np.max(np.abs(state.u[a]) + c)) for a in range(state.grid.dim)
    )
    dt = CFL_ADVECTIVE * min(state.grid.spacing) / max(speed, 1e-300)
    if eps > 0 and coeffs is not None:
        rho_min = float(np.min(state.rho))
        diff = eps * max(coeffs.nu_visc, (2.0 / 3.0) * coeffs.kappa, coeffs.D_diff) / rho_min
        if diff > 0:
            dt = min(dt, CFL_DIFFUSIVE * min(state.grid.spacing) ** 2 / diff)
    return dt


def vns_step(
    state: HydroState,
    kernel: KacKernel,
    coeffs: TransportCoefficients | None,
    eps: float,
    dt: float,
    rk: str = "rk2",
    gradients: str = "spectral",
    _depth: int = 0,
) -> HydroState:
    """One SSP Runge-Kutta step of the finite-volume discretization.

    Conserves the discrete totals of rho and phi exactly (flux form plus
    mean-free source terms).  Rejects dt beyond the stability bound; on
    positivity loss the step is retried as two half steps, at most
    MAX_HALVINGS deep.
    """
    adm = admissible_dt(state, coeffs, eps)
    if dt > adm:
        raise ValueError(f"dt={dt:.3e} exceeds the admissible {adm:.3e}")
    grid = state.grid

    def rhs(cons):
        return _rusanov_divergence(cons, grid) + _step_sources(
            cons, grid, kernel, coeffs, eps, gradients
        )

    u0 = _to_conservative(state)
    try:
        if rk == "rk2":
            u1 = u0 + dt * rhs(u0)
            u_new = 0.5 * u0 + 0.5 * (u1 + dt * rhs(u1))
        elif rk == "rk3":
            u1 = u0 + dt * rhs(u0)
            u2 = 0.75 * u0 + 0.25 * (u1 + dt * rhs(u1))
            u_new = u0 / 3.0 + (2.0 / 3.0) * (u2 + dt * rhs(u2))
        else:
            raise ValueError(f"unknown integrator {rk!r}")
        return _from_conservative(u_new, grid, check=True)
    except ValueError as err:
        if "positive" not in str(err) and "phi" not in str(err):
            raise
        if _depth >= MAX_HALVINGS:
            raise ValueError(
                f"positivity loss persists after {MAX_HALVINGS} dt halvings"
            ) from err
        half = vns_step(state, kernel, coeffs, eps, dt / 2, rk, gradients, _depth + 1)
        return vns_step(half, kernel, coeffs, eps, dt / 2, rk, gradients, _depth + 1)
