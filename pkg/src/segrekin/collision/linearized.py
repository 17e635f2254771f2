"""Discrete linearized collision operators about a fixed Maxwellian.

L g = J(M, g) + J(g, M) has the (d+2)-dimensional null space spanned by
M, M v, M |v|^2; Gamma g = J(g, M) annihilates only multiples of M.  Both
are self-adjoint and nonpositive in the inner product weighted by 1/M,
and the discrete assembly inherits those properties exactly because the
quadrature conserves and balances Maxwellians termwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segrekin.collision.maxwell import MaxwellianParams, maxwellian
from segrekin.collision.quadrature import (
    AngularQuadrature,
    CrossSection,
    assemble_operators,
    collision_invariants,
)
from segrekin.domain import VelocityGrid

# dense matrices: refuse silly sizes (documented memory guard)
MAX_OPERATOR_NODES = 4096


class SolveDiverged(RuntimeError):
    """Iterative solve hit its iteration cap; carries the final residual."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"operator solve stalled at relative residual {residual:.3e} "
            f"after {iterations} iterations"
        )
        self.residual = residual
        self.iterations = iterations


@dataclass
class LinearCollisionOperator:
    """Dense velocity-space operator with its null-space bookkeeping.

    ``matrix`` acts on flattened slices; ``null_basis`` columns span the
    null space, orthonormalized in the 1/M-weighted inner product whose
    diagonal weight is ``metric``.
    """

    kind: str  # 'L' or 'Gamma'
    matrix: np.ndarray
    nu_diag: np.ndarray
    maxwellian: np.ndarray
    null_basis: np.ndarray
    metric: np.ndarray  # w / M per node
    vgrid: VelocityGrid

    def apply(self, slice_values: np.ndarray) -> np.ndarray:
        return (self.matrix @ slice_values.reshape(-1)).reshape(slice_values.shape)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sum(self.metric * a.reshape(-1) * b.reshape(-1)))

    def project_null(self, slice_values: np.ndarray) -> np.ndarray:
        flat = slice_values.reshape(-1)
        coef = self.null_basis.T @ (self.metric * flat)
        return (self.null_basis @ coef).reshape(slice_values.shape)

    def project_orthogonal(self, slice_values: np.ndarray) -> np.ndarray:
        return slice_values - self.project_null(slice_values)

    def asymmetry(self) -> float:
        """Relative self-adjointness defect in the 1/M-weighted product."""
        s = self.metric[:, None] * self.matrix
        return float(np.max(np.abs(s - s.T)) / np.max(np.abs(s)))


def _orthonormal_null_basis(
    raw: np.ndarray, metric: np.ndarray
) -> np.ndarray:
    """Gram-Schmidt in the weighted inner product."""
    basis = []
    for col in raw.T:
        v = col.astype(float).copy()
        for b in basis:
            v -= b * np.sum(metric * b * v)
        nrm = np.sqrt(np.sum(metric * v * v))
        basis.append(v / nrm)
    return np.stack(basis, axis=1)


def _null_raw(kind: str, M: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    chi = collision_invariants(vgrid)
    if kind == "Gamma":
        return (M.reshape(-1) * chi[:, 0])[:, None]
    return M.reshape(-1)[:, None] * chi


def _make_operator(
    kind: str,
    matrix: np.ndarray,
    nu_diag: np.ndarray,
    M: np.ndarray,
    vgrid: VelocityGrid,
) -> LinearCollisionOperator:
    metric = vgrid.weight / M.reshape(-1)
    basis = _orthonormal_null_basis(_null_raw(kind, M, vgrid), metric)
    return LinearCollisionOperator(
        kind=kind,
        matrix=matrix,
        nu_diag=nu_diag,
        maxwellian=M.reshape(-1),
        null_basis=basis,
        metric=metric,
        vgrid=vgrid,
    )


def build_linearized(
    p: MaxwellianParams,
    vgrid: VelocityGrid,
    cs: CrossSection | None = None,
    angles: AngularQuadrature | None = None,
) -> tuple[LinearCollisionOperator, LinearCollisionOperator]:
    """Assemble (L, Gamma) by streaming the exact quadrature once.

    Dense output; node counts above 4096 are refused because the matrices
    grow quadratically.
    """
    if vgrid.n_nodes > MAX_OPERATOR_NODES:
        raise ValueError(
            f"{vgrid.n_nodes} nodes would need a "
            f"{vgrid.n_nodes}^2 dense matrix; cap is {MAX_OPERATOR_NODES}"
        )
    M = maxwellian(p, vgrid)
    L, G, nu = assemble_operators(M, vgrid, cs, angles)
    return (
        _make_operator("L", L, nu, M, vgrid),
        _make_operator("Gamma", G, nu, M, vgrid),
    )


def bgk_linearized(
    p: MaxwellianParams,
    vgrid: VelocityGrid,
    nu_collision: float,
    kind: str = "Gamma",
) -> LinearCollisionOperator:
    """Single-rate diagonal surrogate -nu_c (I - P_null).

    Shares the null space and sign structure of the exact operator; used
    as the closed-form reference in transport-coefficient checks.
    """
    if nu_collision <= 0:
        raise ValueError("collision rate must be positive")
    M = maxwellian(p, vgrid)
    metric = vgrid.weight / M.reshape(-1)
    basis = _orthonormal_null_basis(_null_raw(kind, M, vgrid), metric)
    proj = basis @ (basis.T * metric[None, :])
    matrix = -nu_collision * (np.eye(vgrid.n_nodes) - proj)
    return LinearCollisionOperator(
        kind=kind,
        matrix=matrix,
        nu_diag=np.full(vgrid.n_nodes, nu_collision),
        maxwellian=M.reshape(-1),
        null_basis=basis,
        metric=metric,
        vgrid=vgrid,
    )


def solve_orthogonal(
    op: LinearCollisionOperator,
    source: np.ndarray,
    rel_tol: float = 1e-11,
    max_iter: int = 5000,
) -> np.ndarray:
    """Solve op x = source on the orthogonal complement of the null space.

    The source is projected onto the complement first (the projection
    residual is discarded by construction); conjugate gradients run on the
    positive-definite operator -op in the 1/M-weighted inner product with
    the loss frequency as a diagonal preconditioner.  Raises
    :class:`SolveDiverged` with the final residual on stagnation.
    """
    shape = source.shape
    b = op.project_orthogonal(source).reshape(-1)
    b_norm = np.sqrt(op.inner(b, b))
    if b_norm == 0.0:
        return np.zeros(shape)

    def apply_a(v):
        return -op.project_orthogonal(op.matrix @ v)

    # CG on A = -op (positive definite on the complement); solution is -x
    inv_nu = 1.0 / np.maximum(op.nu_diag, 1e-300)
    x = np.zeros(op.vgrid.n_nodes)
    r = b.copy()
    z = op.project_orthogonal(inv_nu * r)
    p = z.copy()
    rz = op.inner(r, z)
    res = 1.0
    for _ in range(max_iter):
        ap = apply_a(p)
        alpha = rz / op.inner(p, ap)
        x = x + alpha * p
        r = r - alpha * ap
        res = np.sqrt(op.inner(r, r)) / b_norm
        if res < rel_tol:
            return (-x).reshape(shape)
        z = op.project_orthogonal(inv_nu * r)
        rz_new = op.inner(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolveDiverged(res, max_iter)
