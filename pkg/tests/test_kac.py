import numpy as np
import pytest

from segrekin.domain import GridSpec, ScalarField, make_grids
from segrekin.kac import PotentialSpec, convolve, forces, tabulate_kernel


def direct_convolution(kernel, values):
    """Brute-force O(N^2) periodic convolution oracle (1D)."""
    n = values.shape[0]
    dx = kernel.grid.cell_volume
    out = np.zeros(n)
    for i in range(n):
        for j in range(n):
            out[i] += kernel.real_table[(i - j) % n] * values[j]
    return out * dx


def centered_gradient(values, dx):
    """Second-order centered periodic difference oracle (1D)."""
    return (np.roll(values, -1) - np.roll(values, 1)) / (2 * dx)


def make_1d(cells=64, shape="tophat", radius=0.25, amplitude=1.0):
    grid, _ = make_grids(GridSpec(dim=1, extent=1.0, cells=cells))
    kernel = tabulate_kernel(PotentialSpec(shape, radius, amplitude), grid)
    return grid, kernel


def test_tophat_uhat0_is_analytic_integral():
    _, kernel = make_1d()
    assert kernel.uhat0 == pytest.approx(0.5, abs=1e-14)


def test_gaussian_2d_multipliers_decay_monotonically():
    grid, _ = make_grids(GridSpec(dim=2, extent=1.0, cells=32))
    kernel = tabulate_kernel(PotentialSpec("gaussian", 0.08, 1.0), grid)
    # along the kx axis, |Uhat| decreases with |k| until it reaches the
    # discrete-lattice noise floor
    half = grid.cells[0] // 2
    line = kernel.fourier_multipliers[: half + 1, 0]
    resolved = line > 1e-9 * kernel.uhat0
    assert np.count_nonzero(resolved) >= 5
    assert np.all(np.diff(line[resolved]) < 0)


def test_roundtrip_transform_identity():
    grid, kernel = make_1d()
    back = np.fft.ifftn(kernel.fourier_multipliers).real / grid.cell_volume
    rel = np.max(np.abs(back - kernel.real_table)) / np.max(kernel.real_table)
    assert rel < 1e-10


def test_support_too_large_rejected():
    grid, _ = make_grids(GridSpec(dim=1, extent=1.0, cells=64))
    with pytest.raises(ValueError, match="below 0.5"):
        tabulate_kernel(PotentialSpec("tophat", 0.5, 1.0), grid)


def test_convolve_constant_gives_uhat0():
    grid, kernel = make_1d()
    g = ScalarField.constant(grid, 1.0)
    out = convolve(kernel, g)
    assert np.allclose(out.values, 0.5, atol=1e-13)


def test_convolve_cosine_mode_against_direct_sum():
    grid, kernel = make_1d()
    x = grid.axis_coords(0)
    g = ScalarField(grid, np.cos(2 * np.pi * x))
    spectral = convolve(kernel, g).values
    direct = direct_convolution(kernel, g.values)
    assert np.max(np.abs(spectral - direct)) < 1e-12
    # single mode in, single mode out with multiplier Uhat(2*pi)
    uhat_k1 = kernel.multiplier_at((1,))
    assert np.allclose(spectral, uhat_k1 * g.values, atol=1e-12)


def test_convolution_commutes_with_translation():
    grid, kernel = make_1d()
    rng = np.random.default_rng(3)
    g = rng.random(64)
    a = np.roll(convolve(kernel, ScalarField(grid, g)).values, 1)
    b = convolve(kernel, ScalarField(grid, np.roll(g, 1))).values
    assert np.allclose(a, b, atol=1e-13)


def test_spectral_matches_direct_sum_up_to_128_cells():
    for cells in (32, 64, 128):
        grid, _ = make_grids(GridSpec(dim=1, extent=1.0, cells=cells))
        kernel = tabulate_kernel(PotentialSpec("smooth_bump", 0.2, 0.7), grid)
        rng = np.random.default_rng(cells)
        g = rng.random(cells)
        spectral = convolve(kernel, ScalarField(grid, g)).values
        direct = direct_convolution(kernel, g)
        rel = np.max(np.abs(spectral - direct)) / np.max(np.abs(direct))
        assert rel < 1e-8


def test_uniform_densities_give_zero_forces():
    grid, kernel = make_1d()
    n = ScalarField.constant(grid, 1.3)
    for field in forces(kernel, n, n):
        assert np.allclose(field.values, 0.0, atol=1e-13)


def test_species_swap_flips_w_keeps_f():
    grid, kernel = make_1d()
    rng = np.random.default_rng(5)
    n_r = ScalarField(grid, 1.0 + rng.random(64))
    n_b = ScalarField(grid, 1.0 + rng.random(64))
    f1, w1, _, _ = forces(kernel, n_r, n_b)
    f2, w2, _, _ = forces(kernel, n_b, n_r)
    assert np.allclose(f1.values, f2.values, atol=1e-13)
    assert np.allclose(w1.values, -w2.values, atol=1e-13)


def test_single_mode_force_amplitude_against_oracle():
    grid, kernel = make_1d()
    x = grid.axis_coords(0)
    n_r = ScalarField.constant(grid, 1.0)
    n_b = ScalarField(grid, 1.0 + 0.1 * np.cos(2 * np.pi * x))
    _, _, f_r, _ = forces(kernel, n_r, n_b)
    # F_r = -d/dx (U * n_b): single mode with amplitude 0.1 * 2pi * Uhat(2pi)
    uhat_k1 = kernel.multiplier_at((1,))
    expected = 0.1 * 2 * np.pi * uhat_k1 * np.sin(2 * np.pi * x)
    assert np.max(np.abs(f_r.values[0] - expected)) < 1e-12
    # independent route: direct-sum convolution + centered finite differences
    conv = direct_convolution(kernel, n_b.values)
    fd = -centered_gradient(conv, grid.spacing[0])
    # centered differences are 2nd order; compare at its accuracy
    assert np.max(np.abs(f_r.values[0] - fd)) < (2 * np.pi / 64) ** 2


def test_action_reaction_integral_vanishes():
    grid, kernel = make_1d(cells=96, shape="gaussian", radius=0.05)
    rng = np.random.default_rng(7)
    for _ in range(5):
        n_r = ScalarField(grid, rng.random(96) + 0.1)
        n_b = ScalarField(grid, rng.random(96) + 0.1)
        _, _, f_r, f_b = forces(kernel, n_r, n_b)
        total = np.sum(n_r.values * f_r.values[0] + n_b.values * f_b.values[0])
        total *= grid.cell_volume
        scale = np.max(np.abs(n_r.values * f_r.values[0])) + 1e-300
        assert abs(total) / scale < 1e-10


def test_forces_with_equal_densities_have_zero_w():
    grid, kernel = make_1d()
    rng = np.random.default_rng(11)
    n = ScalarField(grid, 1.0 + rng.random(64))
    _, w, _, _ = forces(kernel, n, n)
    assert np.allclose(w.values, 0.0, atol=1e-13)


def test_convolve_rejects_grid_mismatch():
    grid_a, _ = make_grids(GridSpec(dim=1, extent=1.0, cells=64))
    grid_b, _ = make_grids(GridSpec(dim=1, extent=1.0, cells=32))
    kernel = tabulate_kernel(PotentialSpec("tophat", 0.2, 1.0), grid_a)
    with pytest.raises(ValueError, match="different grid"):
        convolve(kernel, ScalarField.constant(grid_b, 1.0))
