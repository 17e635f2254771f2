import numpy as np
import pytest

from segrekin.collision.maxwell import (
    MaxwellianParams,
    discrete_maxwellian,
    maxwellian,
    moments,
    moments_batch,
)
from segrekin.domain import TruncationWarning, VelocityGrid


def test_maxwellian_peak_value_3d():
    vg = VelocityGrid(3, 6.0, 24)
    m = maxwellian(MaxwellianParams(1.0, (0.0, 0.0, 0.0), 1.0), vg)
    # node nearest the origin sits at (dv/2, dv/2, dv/2)
    peak_node = np.unravel_index(np.argmax(m), m.shape)
    v = np.array([vg.node_component(a).reshape(-1)[i] for a, i in enumerate(peak_node)])
    expected = (2 * np.pi) ** -1.5 * np.exp(-np.sum(v**2) / 2)
    assert m[peak_node] == pytest.approx(expected, rel=1e-14)
    assert (2 * np.pi) ** -1.5 == pytest.approx(0.0634936, abs=5e-8)


def test_maxwellian_zero_density():
    vg = VelocityGrid(2, 5.0, 12)
    m = maxwellian(MaxwellianParams(0.0, (0.0, 0.0), 1.0), vg)
    assert np.all(m == 0.0)


def test_maxwellian_linear_in_density():
    vg = VelocityGrid(1, 5.0, 16)
    m1 = maxwellian(MaxwellianParams(1.0, (0.5,), 0.7), vg)
    m2 = maxwellian(MaxwellianParams(2.0, (0.5,), 0.7), vg)
    assert np.allclose(m2, 2 * m1)


def test_maxwellian_rejects_bad_temperature():
    with pytest.raises(ValueError):
        MaxwellianParams(1.0, (0.0,), 0.0)


def test_maxwellian_warns_on_drift_into_cutoff():
    vg = VelocityGrid(1, 4.0, 16)
    with pytest.warns(TruncationWarning):
        maxwellian(MaxwellianParams(1.0, (3.5,), 1.0), vg)


def test_moments_of_maxwellian_converge():
    # derived oracle: the midpoint quadrature of the analytic gaussian is
    # exponentially accurate; at v_max = 6, 32 nodes the defect is < 1e-6
    vg = VelocityGrid(3, 6.0, 32)
    p = MaxwellianParams(1.2, (0.4, -0.2, 0.0), 0.9)
    n, u, T = moments(maxwellian(p, vg), vg)
    assert n == pytest.approx(1.2, abs=1e-6)
    assert np.allclose(u, p.u, atol=1e-6)
    assert T == pytest.approx(0.9, abs=1e-6)


def test_moments_density_adds_linearly():
    vg = VelocityGrid(2, 5.0, 16)
    rng = np.random.default_rng(0)
    a = rng.random(vg.shape)
    b = rng.random(vg.shape)
    na, *_ = moments(a, vg)
    nb, *_ = moments(b, vg)
    nab, *_ = moments(a + b, vg)
    assert nab == pytest.approx(na + nb, rel=1e-14)


def test_moments_shift_by_node_aligned_velocity():
    vg = VelocityGrid(1, 6.0, 48)
    p = MaxwellianParams(1.0, (0.0,), 0.5)
    m = maxwellian(p, vg)
    shifted = np.roll(m, 4)
    shifted[:4] = 0.0  # shift, not wrap
    n0, u0, T0 = moments(m, vg)
    n1, u1, T1 = moments(shifted, vg)
    assert u1[0] - u0[0] == pytest.approx(4 * vg.dv, abs=1e-9)
    assert T1 == pytest.approx(T0, abs=1e-9)


def test_moments_vacuum_markers():
    vg = VelocityGrid(1, 5.0, 16)
    n, u, T = moments(np.zeros(vg.shape), vg)
    assert n == 0.0 and u is None and T is None


def test_discrete_maxwellian_recovers_exact_moments():
    vg = VelocityGrid(3, 6.0, 16)
    m = discrete_maxwellian(0.8, (0.3, -0.5, 0.1), 1.3, vg)
    n, u, T = moments(m, vg)
    assert n == pytest.approx(0.8, rel=1e-12)
    assert np.allclose(u, (0.3, -0.5, 0.1), atol=1e-12)
    assert T == pytest.approx(1.3, rel=1e-12)


def test_moments_batch_matches_single():
    vg = VelocityGrid(2, 5.0, 12)
    rng = np.random.default_rng(2)
    slab = rng.random((3,) + vg.shape)
    n, u, T, vac = moments_batch(slab, vg)
    for c in range(3):
        nc, uc, Tc = moments(slab[c], vg)
        assert n[c] == pytest.approx(nc)
        assert np.allclose(u[:, c], uc)
        assert T[c] == pytest.approx(Tc)
    assert not vac.any()
