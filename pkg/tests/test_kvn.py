import numpy as np
import pytest

from kvnquant.hamiltonian import PolynomialHamiltonian, free_particle, harmonic, quartic
from kvnquant.kvn import (
    KvNWave,
    PhaseGrid,
    _gaussian_wave,
    classical_kernel_apply,
    density_compatibility,
    evolve_density,
    evolve_kvn,
    liouvillian_apply,
)

GRID = PhaseGrid.square(6, 128)


def l2(a, b, grid=GRID):
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2) * grid.cell_area))


def rotated_gaussian(grid, T, center=(1.0, 0.0)):
    """Closed form of a harmonic-flow Gaussian: ψ0 evaluated at the backward rotated point."""
    psi0 = _gaussian_wave(grid, center, 2**-0.5)
    Q, P = grid.mesh()
    c, s = np.cos(T), np.sin(T)
    q0, p0 = Q * c - P * s, Q * s + P * c
    amp = 1 / np.sqrt(np.sum(np.exp(-2 * ((Q - center[0]) ** 2 + (P - center[1]) ** 2))) * grid.cell_area)
    return psi0, amp * np.exp(-((q0 - center[0]) ** 2 + (p0 - center[1]) ** 2))


# ------------------------------------------------------------- liouvillian


def test_rotation_invariant_gaussian_is_annihilated():
    # narrow enough that the periodic seam is invisible at double precision
    psi = _gaussian_wave(GRID, (0.0, 0.0), 0.6)
    out = liouvillian_apply(harmonic(), psi)
    assert np.max(np.abs(out.values)) <= 1e-10
    assert out.warnings == []


def test_free_liouvillian_on_product_wave():
    Q, P = GRID.mesh()
    f, g = np.exp(-P**2), np.exp(-2 * Q**2)
    psi = KvNWave(GRID, f * g)
    out = liouvillian_apply(free_particle(), psi)
    expected = -1j * P * f * (-4 * Q * g)
    assert np.max(np.abs(out.values - expected)) <= 1e-9


def test_constant_hamiltonian_liouvillian_is_zero():
    psi = _gaussian_wave(GRID, (0.5, -0.3))
    out = liouvillian_apply(PolynomialHamiltonian(1, {(0, 0): 2.0}), psi)
    assert np.all(out.values == 0)


def test_unresolved_wave_is_flagged():
    Q, _ = GRID.mesh()
    psi = KvNWave(GRID, np.where(np.abs(Q) < 1, 1.0, 0.0))
    out = liouvillian_apply(harmonic(), psi)
    assert any("unresolved" in w for w in out.warnings)


def test_liouvillian_needs_one_degree_of_freedom():
    with pytest.raises(ValueError):
        liouvillian_apply(PolynomialHamiltonian(2, {(2, 0, 0, 0): 1.0}), _gaussian_wave(GRID, (0, 0)))


# ---------------------------------------------------------------- evolution


def test_quarter_period_moves_center():
    psi0 = _gaussian_wave(GRID, (1.0, 0.0), 2**-0.5)
    out = evolve_kvn(harmonic(), psi0, np.pi / 2)
    assert np.allclose(out.mean(), [0.0, -1.0], atol=GRID.dq)


def test_zero_time_is_identity():
    psi0 = _gaussian_wave(GRID, (1.0, 0.5))
    for method in ("characteristics", "spectral-split"):
        out = evolve_kvn(quartic(), psi0, 0.0, method=method)
        assert np.array_equal(out.values, psi0.values)


def test_methods_agree():
    grid = PhaseGrid.square(6, 256)
    psi0 = _gaussian_wave(grid, (1.0, 0.0), 2**-0.5)
    a = evolve_kvn(harmonic(), psi0, 1.0)
    b = evolve_kvn(harmonic(), psi0, 1.0, method="spectral-split", dt=1e-3)
    assert l2(a.values, b.values, grid) <= 1e-4


def test_kernel_apply_matches_characteristics_bitwise():
    psi0 = _gaussian_wave(GRID, (0.4, 0.8))
    a = classical_kernel_apply(quartic(), psi0, 0.7)
    b = evolve_kvn(quartic(), psi0, 0.7)
    assert np.array_equal(a.values, b.values)


def test_linear_hamiltonian_shifts_rigidly():
    H = PolynomialHamiltonian(1, {(0, 1): 1.0})
    psi0 = _gaussian_wave(GRID, (-1.0, 0.0))
    out = evolve_kvn(H, psi0, 1.5)
    expected = _gaussian_wave(GRID, (0.5, 0.0))
    assert np.max(np.abs(out.values - expected.values)) <= 1e-3
    assert np.allclose(out.mean(), [0.5, 0.0], atol=1e-6)


def test_norm_conserved_and_density_mass():
    psi0 = _gaussian_wave(GRID, (1.0, 0.0), 2**-0.5)
    report = density_compatibility(harmonic(), psi0, 1.0)
    assert report["norm_drift"] <= 1e-6
    assert abs(report["mass_final"] - report["mass_initial"]) <= 1e-6
    assert report["l1_distance"] <= 1e-5


def test_group_property():
    psi0 = _gaussian_wave(GRID, (1.0, 0.0), 2**-0.5)
    two = evolve_kvn(harmonic(), evolve_kvn(harmonic(), psi0, 0.4), 0.6)
    one = evolve_kvn(harmonic(), psi0, 1.0)
    assert l2(two.values, one.values) <= 1e-4


def test_interpolation_converges_at_least_third_order():
    errors = []
    for n in (64, 128, 256):
        grid = PhaseGrid.square(6, n)
        psi0, exact = rotated_gaussian(grid, 1.0)
        errors.append(np.max(np.abs(evolve_kvn(harmonic(), psi0, 1.0).values - exact)))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 3)


def test_support_violations_counted():
    psi0 = _gaussian_wave(GRID, (0.0, 0.0))
    out = evolve_kvn(free_particle(), psi0, 1.0)
    assert out.support_violations > 0
    assert out.warnings


# ------------------------------------------------------------------ density


def test_density_compatibility_zero_time():
    psi0 = _gaussian_wave(GRID, (1.0, 0.0))
    report = density_compatibility(harmonic(), psi0, 0.0)
    assert report["l1_distance"] == 0 and report["norm_drift"] == 0


def test_phase_carrying_wave_under_free_flow():
    psi0 = _gaussian_wave(GRID, (-1.0, 0.5), 2**-0.5, momentum_phase=(0.7, -0.4))
    report = density_compatibility(free_particle(), psi0, 1.0)
    assert report["l1_distance"] <= 1e-6


def test_evolve_density_shape_check():
    with pytest.raises(ValueError):
        evolve_density(harmonic(), np.zeros((4, 4)), GRID, 1.0)


# --------------------------------------------------------------- validation


def test_grid_validation():
    with pytest.raises(ValueError):
        PhaseGrid((1.0, 1.0), (-1.0, 1.0), 32, 32)
    with pytest.raises(ValueError):
        PhaseGrid((-1.0, 1.0), (-1.0, 1.0), 8, 32)
    with pytest.raises(ValueError):
        PhaseGrid((-1.0, 1.0), (-1.0, 1.0), 32, 32, boundary="periodic")
    with pytest.raises(ValueError):
        KvNWave(GRID, np.full(GRID.shape, np.nan))


def test_evolution_argument_errors():
    psi0 = _gaussian_wave(GRID, (0.0, 0.0))
    with pytest.raises(ValueError):
        evolve_kvn(harmonic(), psi0, -1.0)
    with pytest.raises(ValueError):
        evolve_kvn(harmonic(), psi0, 1.0, method="leapfrog")
