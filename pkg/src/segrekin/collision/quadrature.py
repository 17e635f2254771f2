"""Exact two-species Boltzmann collision quadrature on the velocity lattice.

For nodes v_i, v_j the admissible post-collision pairs (v_k, v_l) are the
lattice pairs that conserve momentum and energy *exactly*:

    m_k + m_l = m_i + m_j,      |m_k - m_i'|^2 ... <=> |q|^2 = |p|^2,

with p = m_i - m_j, q = m_k - m_l in integer node coordinates and q = p
(mod 2) so the midpoints are lattice points.  The angular integral over
scattering directions becomes a sum over the integer points of that energy
shell, weighted uniformly.  Consequences, all exact to roundoff:

  * every quadruple conserves mass, momentum and energy, so the invariant
    moments of the symmetrized operator vanish;
  * exp(a + b.v + c|v|^2) balances gain and loss termwise, so the operator
    vanishes on shared Maxwellians and the linearized operator annihilates
    its null space;
  * the quadruple set is closed under (i,j) <-> (k,l) and q -> -q with
    equal weights, which is the exchange symmetry behind the entropy
    inequality and the self-adjointness of the linearized operator.

``thinning`` keeps a deterministic, exchange-symmetric subset of shell
entries (hash-selected) and scales the weights accordingly: a coarser
angular quadrature with the same exact structure.  Out-of-range quadruples
(k or l beyond the cutoff box) are dropped whole, a controlled truncation
of collision frequency near the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit, prange

from segrekin.domain import VelocityGrid

# deterministic chunk count for scalar reductions (thread-count invariant)
_NCHUNKS = 256

_H1 = np.int64(73856093)
_H2 = np.int64(19349663)
_H3 = np.int64(83492791)


@dataclass(frozen=True)
class CrossSection:
    """Collision kernel b(|v - v*|, w) = |v - v*|^sigma h(w).

    ``sigma`` in [0, 1] (hard spheres at 1, velocity-independent at 0);
    ``angular`` is a bounded nonnegative function of the cosine of the
    deflection angle, tabulated internally.  None means isotropic h = 1.
    """

    sigma: float = 1.0
    angular: Callable[[np.ndarray], np.ndarray] | None = None
    angular_samples: int = 129

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError("cross-section exponent must lie in [0, 1]")

    def angular_table(self) -> np.ndarray:
        if self.angular is None:
            return np.ones(1)
        ct = np.linspace(-1.0, 1.0, self.angular_samples)
        h = np.asarray(self.angular(ct), dtype=float)
        if h.shape != ct.shape or np.any(h < 0) or not np.all(np.isfinite(h)):
            raise ValueError("angular factor must be bounded and nonnegative")
        return h


@dataclass(frozen=True)
class AngularQuadrature:
    """Scattering-direction quadrature induced by the lattice energy shells.

    The nodes are the exact integer shell points; ``thinning`` > 1 keeps a
    deterministic 1/thinning subset of each shell, symmetric under collision
    exchange and w -> -w, with weights rescaled to compensate.
    ``energy_stride`` > 1 additionally keeps only relative-speed shells with
    |p|^2 divisible by the stride (again weight-rescaled): a coarser
    quadrature of the same integral.  Both subsettings are per-quadruple
    symmetric, so exact conservation, the Maxwellian balance and the entropy
    sign survive unchanged; only smoothness of the approximation degrades.
    """

    thinning: int = 1
    energy_stride: int = 1

    def __post_init__(self):
        if self.thinning < 1 or self.energy_stride < 1:
            raise ValueError("angular quadrature must be nonempty (stride >= 1)")


class CollisionTable:
    """Precomputed energy shells for one lattice size and dimension."""

    def __init__(self, nodes_per_axis: int, dim_v: int):
        if dim_v not in (2, 3):
            raise ValueError(
                "exact collision quadrature needs dim_v in {2, 3}; in 1D "
                "equal-mass collisions only exchange velocities"
            )
        if nodes_per_axis < 8:
            raise ValueError("need at least 8 velocity nodes per axis")
        self.nodes_per_axis = nodes_per_axis
        self.dim_v = dim_v
        n = nodes_per_axis
        emax = dim_v * (n - 1) ** 2
        qmax = int(np.floor(np.sqrt(emax)))
        rng = np.arange(-qmax, qmax + 1)
        mesh = np.meshgrid(*([rng] * dim_v), indexing="ij")
        q = np.stack([m.ravel() for m in mesh], axis=-1).astype(np.int64)
        e = np.sum(q * q, axis=1)
        keep = e <= emax
        q = q[keep]
        e = e[keep]
        parity = np.zeros(q.shape[0], dtype=np.int64)
        for a in range(dim_v):
            parity |= (q[:, a] & 1) << a
        nclasses = 1 << dim_v
        key = e * nclasses + parity
        order = np.argsort(key, kind="stable")
        q = q[order]
        key = key[order]
        nkeys = (emax + 1) * nclasses
        counts = np.bincount(key, minlength=nkeys)
        self.offsets = np.zeros(nkeys + 1, dtype=np.int64)
        np.cumsum(counts, out=self.offsets[1:])
        self.qlist = q.astype(np.int16)
        habs = np.abs(q)
        qhash = habs[:, 0] * _H1 ^ habs[:, 1] * _H2
        if dim_v == 3:
            qhash = qhash ^ habs[:, 2] * _H3
        self.qhash = np.abs(qhash).astype(np.int64)
        # integer node coordinates of the flattened lattice
        axes = [np.arange(n)] * dim_v
        mi = np.meshgrid(*axes, indexing="ij")
        self.midx = np.stack([m.ravel() for m in mi], axis=-1).astype(np.int64)
        self.sphere_area = 4.0 * np.pi if dim_v == 3 else 2.0 * np.pi


_TABLE_CACHE: dict[tuple[int, int], CollisionTable] = {}


def get_table(vgrid: VelocityGrid) -> CollisionTable:
    key = (vgrid.nodes_per_axis, vgrid.dim_v)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = CollisionTable(*key)
    return _TABLE_CACHE[key]


@njit(cache=True, inline="always")
def _speed_factor(E, dv, sigma):
    if sigma == 0.0:
        return 1.0
    if sigma == 1.0:
        return np.sqrt(E) * dv
    return (E * dv * dv) ** (0.5 * sigma)


@njit(cache=True, parallel=True)
def _j_apply_3d(f, g, midx, offsets, qlist, qhash, n, w_node, dv, sigma,
                htab, thin, estride, area):
    nn = f.shape[0]
    nh = htab.shape[0]
    out = np.zeros(nn)
    top = 2 * (n - 1)
    for i in prange(nn):
        mi0 = midx[i, 0]
        mi1 = midx[i, 1]
        mi2 = midx[i, 2]
        fi = f[i]
        acc = 0.0
        for j in range(nn):
            p0 = mi0 - midx[j, 0]
            p1 = mi1 - midx[j, 1]
            p2 = mi2 - midx[j, 2]
            E = p0 * p0 + p1 * p1 + p2 * p2
            if E == 0:
                continue
            if estride > 1 and E % estride != 0:
                continue
            pc = (p0 & 1) | ((p1 & 1) << 1) | ((p2 & 1) << 2)
            key = E * 8 + pc
            lo = offsets[key]
            hi = offsets[key + 1]
            if hi == lo:
                continue
            ph = np.abs(np.int64(p0 if p0 >= 0 else -p0) * _H1
                        ^ np.int64(p1 if p1 >= 0 else -p1) * _H2
                        ^ np.int64(p2 if p2 >= 0 else -p2) * _H3)
            s0 = mi0 + midx[j, 0]
            s1 = mi1 + midx[j, 1]
            s2 = mi2 + midx[j, 2]
            gj = g[j]
            wpair = w_node * area * thin * estride / (hi - lo) * _speed_factor(E, dv, sigma)
            inv_e = 1.0 / E
            for t in range(lo, hi):
                if thin > 1 and (ph + qhash[t]) % thin != 0:
                    continue
                q0 = qlist[t, 0]
                q1 = qlist[t, 1]
                q2 = qlist[t, 2]
                k0 = s0 + q0
                l0 = s0 - q0
                if k0 < 0 or k0 > top or l0 < 0 or l0 > top:
                    continue
                k1 = s1 + q1
                l1 = s1 - q1
                if k1 < 0 or k1 > top or l1 < 0 or l1 > top:
                    continue
                k2 = s2 + q2
                l2 = s2 - q2
                if k2 < 0 or k2 > top or l2 < 0 or l2 > top:
                    continue
                kf = ((k0 >> 1) * n + (k1 >> 1)) * n + (k2 >> 1)
                lf = ((l0 >> 1) * n + (l1 >> 1)) * n + (l2 >> 1)
                w = wpair
                if nh > 1:
                    ct = (q0 * p0 + q1 * p1 + q2 * p2) * inv_e
                    w = wpair * htab[int((ct + 1.0) * 0.5 * (nh - 1) + 0.5)]
                acc += w * (f[kf] * g[lf] - fi * gj)
        out[i] = acc
    return out


@njit(cache=True, parallel=True)
def _j_apply_2d(f, g, midx, offsets, qlist, qhash, n, w_node, dv, sigma,
                htab, thin, estride, area):
    nn = f.shape[0]
    nh = htab.shape[0]
    out = np.zeros(nn)
    top = 2 * (n - 1)
    for i in prange(nn):
        mi0 = midx[i, 0]
        mi1 = midx[i, 1]
        fi = f[i]
        acc = 0.0
        for j in range(nn):
            p0 = mi0 - midx[j, 0]
            p1 = mi1 - midx[j, 1]
            E = p0 * p0 + p1 * p1
            if E == 0:
                continue
            if estride > 1 and E % estride != 0:
                continue
            pc = (p0 & 1) | ((p1 & 1) << 1)
            key = E * 4 + pc
            lo = offsets[key]
            hi = offsets[key + 1]
            if hi == lo:
                continue
            ph = np.abs(np.int64(p0 if p0 >= 0 else -p0) * _H1
                        ^ np.int64(p1 if p1 >= 0 else -p1) * _H2)
            s0 = mi0 + midx[j, 0]
            s1 = mi1 + midx[j, 1]
            gj = g[j]
            wpair = w_node * area * thin * estride / (hi - lo) * _speed_factor(E, dv, sigma)
            inv_e = 1.0 / E
            for t in range(lo, hi):
                if thin > 1 and (ph + qhash[t]) % thin != 0:
                    continue
                q0 = qlist[t, 0]
                q1 = qlist[t, 1]
                k0 = s0 + q0
                l0 = s0 - q0
                if k0 < 0 or k0 > top or l0 < 0 or l0 > top:
                    continue
                k1 = s1 + q1
                l1 = s1 - q1
                if k1 < 0 or k1 > top or l1 < 0 or l1 > top:
                    continue
                kf = (k0 >> 1) * n + (k1 >> 1)
                lf = (l0 >> 1) * n + (l1 >> 1)
                w = wpair
                if nh > 1:
                    ct = (q0 * p0 + q1 * p1) * inv_e
                    w = wpair * htab[int((ct + 1.0) * 0.5 * (nh - 1) + 0.5)]
                acc += w * (f[kf] * g[lf] - fi * gj)
        out[i] = acc
    return out


@njit(cache=True, parallel=True)
def _entropy_3d(f1, f2, lf1, lf2, midx, offsets, qlist, qhash, n, w_node, dv,
                sigma, htab, thin, estride, area, partials):
    # unordered pairs i < j; each quadruple contributes both orientations
    nn = f1.shape[0]
    nh = htab.shape[0]
    top = 2 * (n - 1)
    nchunks = partials.shape[0]
    for c in prange(nchunks):
        i_lo = c * nn // nchunks
        i_hi = (c + 1) * nn // nchunks
        a1 = 0.0
        a2 = 0.0
        a12 = 0.0
        a21 = 0.0
        for i in range(i_lo, i_hi):
            mi0 = midx[i, 0]
            mi1 = midx[i, 1]
            mi2 = midx[i, 2]
            f1i = f1[i]
            f2i = f2[i]
            l1i = lf1[i]
            l2i = lf2[i]
            for j in range(i + 1, nn):
                p0 = mi0 - midx[j, 0]
                p1 = mi1 - midx[j, 1]
                p2 = mi2 - midx[j, 2]
                E = p0 * p0 + p1 * p1 + p2 * p2
                if estride > 1 and E % estride != 0:
                    continue
                pc = (p0 & 1) | ((p1 & 1) << 1) | ((p2 & 1) << 2)
                key = E * 8 + pc
                lo = offsets[key]
                hi = offsets[key + 1]
                if hi == lo:
                    continue
                ph = np.abs((p0 if p0 >= 0 else -p0) * _H1
                            ^ (p1 if p1 >= 0 else -p1) * _H2
                            ^ (p2 if p2 >= 0 else -p2) * _H3)
                s0 = mi0 + midx[j, 0]
                s1 = mi1 + midx[j, 1]
                s2 = mi2 + midx[j, 2]
                f1j = f1[j]
                f2j = f2[j]
                l1j = lf1[j]
                l2j = lf2[j]
                c11 = f1i * f1j
                c22 = f2i * f2j
                c12 = f1i * f2j
                c12r = f1j * f2i
                s1sum = l1i + l1j
                s2sum = l2i + l2j
                wpair = w_node * area * thin * estride / (hi - lo) * _speed_factor(E, dv, sigma)
                inv_e = 1.0 / E
                for t in range(lo, hi):
                    if thin > 1 and (ph + qhash[t]) % thin != 0:
                        continue
                    q0 = qlist[t, 0]
                    q1 = qlist[t, 1]
                    q2 = qlist[t, 2]
                    k0 = s0 + q0
                    l0 = s0 - q0
                    if k0 < 0 or k0 > top or l0 < 0 or l0 > top:
                        continue
                    k1 = s1 + q1
                    l1 = s1 - q1
                    if k1 < 0 or k1 > top or l1 < 0 or l1 > top:
                        continue
                    k2 = s2 + q2
                    l2 = s2 - q2
                    if k2 < 0 or k2 > top or l2 < 0 or l2 > top:
                        continue
                    kf = ((k0 >> 1) * n + (k1 >> 1)) * n + (k2 >> 1)
                    lf = ((l0 >> 1) * n + (l1 >> 1)) * n + (l2 >> 1)
                    w = wpair
                    if nh > 1:
                        ct = (q0 * p0 + q1 * p1 + q2 * p2) * inv_e
                        w = wpair * htab[int((ct + 1.0) * 0.5 * (nh - 1) + 0.5)]
                    f1k = f1[kf]
                    f1l = f1[lf]
                    f2k = f2[kf]
                    f2l = f2[lf]
                    a1 += w * (f1k * f1l - c11) * s1sum
                    a2 += w * (f2k * f2l - c22) * s2sum
                    a12 += w * ((f1k * f2l - c12) * l1i + (f1l * f2k - c12r) * l1j)
                    a21 += w * ((f2k * f1l - c12r) * l2i + (f2l * f1k - c12) * l2j)
        partials[c, 0] = a1
        partials[c, 1] = a2
        partials[c, 2] = a12
        partials[c, 3] = a21


@njit(cache=True, parallel=True)
def _entropy_2d(f1, f2, lf1, lf2, midx, offsets, qlist, qhash, n, w_node, dv,
                sigma, htab, thin, estride, area, partials):
    nn = f1.shape[0]
    nh = htab.shape[0]
    top = 2 * (n - 1)
    nchunks = partials.shape[0]
    for c in prange(nchunks):
        i_lo = c * nn // nchunks
        i_hi = (c + 1) * nn // nchunks
        a1 = 0.0
        a2 = 0.0
        a12 = 0.0
        a21 = 0.0
        for i in range(i_lo, i_hi):
            mi0 = midx[i, 0]
            mi1 = midx[i, 1]
            f1i = f1[i]
            f2i = f2[i]
            l1i = lf1[i]
            l2i = lf2[i]
            for j in range(i + 1, nn):
                p0 = mi0 - midx[j, 0]
                p1 = mi1 - midx[j, 1]
                E = p0 * p0 + p1 * p1
                if estride > 1 and E % estride != 0:
                    continue
                pc = (p0 & 1) | ((p1 & 1) << 1)
                key = E * 4 + pc
                lo = offsets[key]
                hi = offsets[key + 1]
                if hi == lo:
                    continue
                ph = np.abs((p0 if p0 >= 0 else -p0) * _H1
                            ^ (p1 if p1 >= 0 else -p1) * _H2)
                s0 = mi0 + midx[j, 0]
                s1 = mi1 + midx[j, 1]
                f1j = f1[j]
                f2j = f2[j]
                l1j = lf1[j]
                l2j = lf2[j]
                c11 = f1i * f1j
                c22 = f2i * f2j
                c12 = f1i * f2j
                c12r = f1j * f2i
                s1sum = l1i + l1j
                s2sum = l2i + l2j
                wpair = w_node * area * thin * estride / (hi - lo) * _speed_factor(E, dv, sigma)
                inv_e = 1.0 / E
                for t in range(lo, hi):
                    if thin > 1 and (ph + qhash[t]) % thin != 0:
                        continue
                    q0 = qlist[t, 0]
                    q1 = qlist[t, 1]
                    k0 = s0 + q0
                    l0 = s0 - q0
                    if k0 < 0 or k0 > top or l0 < 0 or l0 > top:
                        continue
                    k1 = s1 + q1
                    l1 = s1 - q1
                    if k1 < 0 or k1 > top or l1 < 0 or l1 > top:
                        continue
                    kf = (k0 >> 1) * n + (k1 >> 1)
                    lf = (l0 >> 1) * n + (l1 >> 1)
                    w = wpair
                    if nh > 1:
                        ct = (q0 * p0 + q1 * p1) * inv_e
                        w = wpair * htab[int((ct + 1.0) * 0.5 * (nh - 1) + 0.5)]
                    f1k = f1[kf]
                    f1l = f1[lf]
                    f2k = f2[kf]
                    f2l = f2[lf]
                    a1 += w * (f1k * f1l - c11) * s1sum
                    a2 += w * (f2k * f2l - c22) * s2sum
                    a12 += w * ((f1k * f2l - c12) * l1i + (f1l * f2k - c12r) * l1j)
                    a21 += w * ((f2k * f1l - c12r) * l2i + (f2l * f1k - c12) * l2j)
        partials[c, 0] = a1
        partials[c, 1] = a2
        partials[c, 2] = a12
        partials[c, 3] = a21


@njit(cache=True, parallel=True)
def _assemble_3d(M, L, G, nu, midx, offsets, qlist, qhash, n, w_node, dv,
                 sigma, htab, thin, estride, area):
    nn = M.shape[0]
    nh = htab.shape[0]
    top = 2 * (n - 1)
    for i in prange(nn):
        mi0 = midx[i, 0]
        mi1 = midx[i, 1]
        mi2 = midx[i, 2]
        Mi = M[i]
        for j in range(nn):
            p0 = mi0 - midx[j, 0]
            p1 = mi1 - midx[j, 1]
            p2 = mi2 - midx[j, 2]
            E = p0 * p0 + p1 * p1 + p2 * p2
            if E == 0:
                continue
            if estride > 1 and E % estride != 0:
                continue
            pc = (p0 & 1) | ((p1 & 1) << 1) | ((p2 & 1) << 2)
            key = E * 8 + pc
            lo = offsets[key]
            hi = offsets[key + 1]
            if hi == lo:
                continue
            ph = np.abs(np.int64(p0 if p0 >= 0 else -p0) * _H1
                        ^ np.int64(p1 if p1 >= 0 else -p1) * _H2
                        ^ np.int64(p2 if p2 >= 0 else -p2) * _H3)
            s0 = mi0 + midx[j, 0]
            s1 = mi1 + midx[j, 1]
            s2 = mi2 + midx[j, 2]
            Mj = M[j]
            wpair = w_node * area * thin * estride / (hi - lo) * _speed_factor(E, dv, sigma)
            inv_e = 1.0 / E
            for t in range(lo, hi):
                if thin > 1 and (ph + qhash[t]) % thin != 0:
                    continue
                q0 = qlist[t, 0]
                q1 = qlist[t, 1]
                q2 = qlist[t, 2]
                k0 = s0 + q0
                l0 = s0 - q0
                if k0 < 0 or k0 > top or l0 < 0 or l0 > top:
                    continue
                k1 = s1 + q1
                l1 = s1 - q1
                if k1 < 0 or k1 > top or l1 < 0 or l1 > top:
                    continue
                k2 = s2 + q2
                l2 = s2 - q2
                if k2 < 0 or k2 > top or l2 < 0 or l2 > top:
                    continue
                kf = ((k0 >> 1) * n + (k1 >> 1)) * n + (k2 >> 1)
                lf = ((l0 >> 1) * n + (l1 >> 1)) * n + (l2 >> 1)
                w = wpair
                if nh > 1:
                    ct = (q0 * p0 + q1 * p1 + q2 * p2) * inv_e
                    w = wpair * htab[int((ct + 1.0) * 0.5 * (nh - 1) + 0.5)]
                # Gamma g = J(g, M):  + w M_l g_k  - w M_j g_i
                G[i, kf] += w * M[lf]
                G[i, i] -= w * Mj
                nu[i] += w * Mj
                # J(M, g):  + w M_k g_l  - w M_i g_j
                L[i, lf] += w * M[kf]
                L[i, j] -= w * Mi
    # L currently holds J(M, .); add Gamma to get the full linearization
    for i in prange(nn):
        for j in range(nn):
            L[i, j] += G[i, j]


@njit(cache=True, parallel=True)
def _assemble_2d(M, L, G, nu, midx, offsets, qlist, qhash, n, w_node, dv,
                 sigma, htab, thin, estride, area):
    nn = M.shape[0]
    nh = htab.shape[0]
    top = 2 * (n - 1)
    for i in prange(nn):
        mi0 = midx[i, 0]
        mi1 = midx[i, 1]
        Mi = M[i]
        for j in range(nn):
            p0 = mi0 - midx[j, 0]
            p1 = mi1 - midx[j, 1]
            E = p0 * p0 + p1 * p1
            if E == 0:
                continue
            if estride > 1 and E % estride != 0:
                continue
            pc = (p0 & 1) | ((p1 & 1) << 1)
            key = E * 4 + pc
            lo = offsets[key]
            hi = offsets[key + 1]
            if hi == lo:
                continue
            ph = np.abs(np.int64(p0 if p0 >= 0 else -p0) * _H1
                        ^ np.int64(p1 if p1 >= 0 else -p1) * _H2)
            s0 = mi0 + midx[j, 0]
            s1 = mi1 + midx[j, 1]
            Mj = M[j]
            wpair = w_node * area * thin * estride / (hi - lo) * _speed_factor(E, dv, sigma)
            inv_e = 1.0 / E
            for t in range(lo, hi):
                if thin > 1 and (ph + qhash[t]) % thin != 0:
                    continue
                q0 = qlist[t, 0]
                q1 = qlist[t, 1]
                k0 = s0 + q0
                l0 = s0 - q0
                if k0 < 0 or k0 > top or l0 < 0 or l0 > top:
                    continue
                k1 = s1 + q1
                l1 = s1 - q1
                if k1 < 0 or k1 > top or l1 < 0 or l1 > top:
                    continue
                kf = (k0 >> 1) * n + (k1 >> 1)
                lf = (l0 >> 1) * n + (l1 >> 1)
                w = wpair
                if nh > 1:
                    ct = (q0 * p0 + q1 * p1) * inv_e
                    w = wpair * htab[int((ct + 1.0) * 0.5 * (nh - 1) + 0.5)]
                G[i, kf] += w * M[lf]
                G[i, i] -= w * Mj
                nu[i] += w * Mj
                L[i, lf] += w * M[kf]
                L[i, j] -= w * Mi
    for i in prange(nn):
        for j in range(nn):
            L[i, j] += G[i, j]


def collision_invariants(vgrid: VelocityGrid) -> np.ndarray:
    """The d + 2 invariants (1, v_1..v_d, |v|^2 / 2) on the flat lattice."""
    nodes = vgrid.nodes()
    d = vgrid.dim_v
    chi = np.empty((nodes.shape[0], d + 2))
    chi[:, 0] = 1.0
    chi[:, 1 : d + 1] = nodes
    chi[:, d + 1] = 0.5 * np.sum(nodes**2, axis=1)
    return chi


def invariant_moments(values: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    """Weighted moments of the d + 2 collision invariants."""
    chi = collision_invariants(vgrid)
    return vgrid.weight * (values.reshape(-1) @ chi)


def _kernel_args(vgrid: VelocityGrid, cs: CrossSection, angles: AngularQuadrature):
    table = get_table(vgrid)
    return table, dict(
        midx=table.midx,
        offsets=table.offsets,
        qlist=table.qlist,
        qhash=table.qhash,
        n=table.nodes_per_axis,
        w_node=vgrid.weight,
        dv=vgrid.dv,
        sigma=float(cs.sigma),
        htab=cs.angular_table(),
        thin=int(angles.thinning),
        estride=int(angles.energy_stride),
        area=table.sphere_area,
    )


def _project_single(out: np.ndarray, weight_slice: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    """Least-squares removal of all invariant moments from one output.

    The correction lives in span{weight_slice * chi_a}, so it vanishes when
    the raw output is already exactly conservative (zero in, zero out).
    """
    chi = collision_invariants(vgrid)
    w = vgrid.weight
    target = -w * (out.reshape(-1) @ chi)
    basis = weight_slice.reshape(-1)[:, None] * chi
    gram = w * (chi.T @ basis)
    coef = np.linalg.solve(gram, target)
    return out - (basis @ coef).reshape(out.shape)


def boltzmann_J(
    f_slice: np.ndarray,
    g_slice: np.ndarray,
    vgrid: VelocityGrid,
    cs: CrossSection | None = None,
    angles: AngularQuadrature | None = None,
) -> np.ndarray:
    """Discrete collision term J(f, g) on one velocity slice.

    The quadrature conserves termwise, so mass, momentum and energy of the
    symmetrized output are already zero to roundoff; see
    :func:`symmetrized_collision` for the jointly corrected pair.
    """
    cs = cs or CrossSection()
    angles = angles or AngularQuadrature()
    if f_slice.shape != vgrid.shape or g_slice.shape != vgrid.shape:
        raise ValueError("slices must live on the velocity grid")
    table, args = _kernel_args(vgrid, cs, angles)
    kernel = _j_apply_3d if vgrid.dim_v == 3 else _j_apply_2d
    out = kernel(f_slice.reshape(-1), g_slice.reshape(-1), **args)
    return out.reshape(vgrid.shape)


def symmetrized_collision(
    f_slice: np.ndarray,
    g_slice: np.ndarray,
    vgrid: VelocityGrid,
    cs: CrossSection | None = None,
    angles: AngularQuadrature | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """(J(f, g), J(g, f)) with the conservative least-squares polish.

    Each output is corrected to zero mass; the pair is jointly corrected so
    the momentum and energy moments of the sum vanish exactly.
    """
    cs = cs or CrossSection()
    angles = angles or AngularQuadrature()
    j_fg = boltzmann_J(f_slice, g_slice, vgrid, cs, angles)
    j_gf = boltzmann_J(g_slice, f_slice, vgrid, cs, angles)
    return conserve_pair(j_fg, j_gf, f_slice, g_slice, vgrid)


def conserve_pair(
    j1: np.ndarray,
    j2: np.ndarray,
    w1: np.ndarray,
    w2: np.ndarray,
    vgrid: VelocityGrid,
) -> tuple[np.ndarray, np.ndarray]:
    """Joint least-squares moment correction for a cross-collision pair.

    Constraints: each output keeps zero mass; the invariant moments of the
    sum vanish.  The correction is the minimum-norm coefficient solution in
    span{w_alpha * chi} and is identically zero for already-exact inputs.
    """
    d = vgrid.dim_v
    chi = collision_invariants(vgrid)
    w = vgrid.weight
    m1 = w * (j1.reshape(-1) @ chi)
    m2 = w * (j2.reshape(-1) @ chi)
    basis1 = w1.reshape(-1)[:, None] * chi
    basis2 = w2.reshape(-1)[:, None] * chi
    g11 = w * (chi.T @ basis1)
    g22 = w * (chi.T @ basis2)
    ncon = 2 + (d + 1)
    nvar = 2 * (d + 2)
    A = np.zeros((ncon, nvar))
    b = np.zeros(ncon)
    # per-output mass rows
    A[0, : d + 2] = g11[0]
    b[0] = -m1[0]
    A[1, d + 2 :] = g22[0]
    b[1] = -m2[0]
    # joint momentum/energy rows
    for r in range(1, d + 2):
        A[1 + r, : d + 2] = g11[r]
        A[1 + r, d + 2 :] = g22[r]
        b[1 + r] = -(m1[r] + m2[r])
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    c1 = coef[: d + 2]
    c2 = coef[d + 2 :]
    return (
        j1 + (basis1 @ c1).reshape(j1.shape),
        j2 + (basis2 @ c2).reshape(j2.shape),
    )


def entropy_integrals(
    f1: np.ndarray,
    f2: np.ndarray,
    vgrid: VelocityGrid,
    cs: CrossSection | None = None,
    angles: AngularQuadrature | None = None,
    floor: float = 1e-300,
) -> tuple[float, float, float, float]:
    """Raw integrals (Sum w J log f) for the four species pairings.

    Returns (N_11, N_22, N_12, N_21); the physical productions are their
    negatives.  Fused single pass; deterministic chunked reduction.
    """
    cs = cs or CrossSection()
    angles = angles or AngularQuadrature()
    table, args = _kernel_args(vgrid, cs, angles)
    a = f1.reshape(-1)
    b = f2.reshape(-1)
    la = np.log(np.maximum(a, floor)) * vgrid.weight
    lb = np.log(np.maximum(b, floor)) * vgrid.weight
    partials = np.zeros((_NCHUNKS, 4))
    kernel = _entropy_3d if vgrid.dim_v == 3 else _entropy_2d
    kernel(a, b, la, lb, partials=partials, **args)
    sums = partials.sum(axis=0)
    return float(sums[0]), float(sums[1]), float(sums[2]), float(sums[3])


def assemble_operators(
    M: np.ndarray,
    vgrid: VelocityGrid,
    cs: CrossSection | None = None,
    angles: AngularQuadrature | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense matrices (L, Gamma, nu_diag) linearized about the slice M.

    L g = J(M, g) + J(g, M) and Gamma g = J(g, M), assembled by streaming
    the quadruple set once; nu_diag is the multiplicative loss frequency.
    """
    cs = cs or CrossSection()
    angles = angles or AngularQuadrature()
    table, args = _kernel_args(vgrid, cs, angles)
    nn = vgrid.n_nodes
    L = np.zeros((nn, nn))
    G = np.zeros((nn, nn))
    nu = np.zeros(nn)
    kernel = _assemble_3d if vgrid.dim_v == 3 else _assemble_2d
    kernel(M.reshape(-1), L, G, nu, **args)
    return L, G, nu
