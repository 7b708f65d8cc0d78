import numpy as np
import pytest

from kvnquant.hamiltonian import PolynomialHamiltonian, free_particle, harmonic, quartic
from kvnquant.propagator import (
    SlicingScheme,
    closed_form_kernel,
    composition_error,
    fourier_duality_check,
    gaussian_packets,
    momentum_grid,
    momentum_propagator,
    oracle_error,
    phase_tables,
    position_propagator,
    trotter_table,
    unitarity_error,
)
from kvnquant.scenarios import run_variance_contrast

SMALL = dict(x_range=(-12.0, 12.0), n_points=256)


def test_free_kernel_oracle():
    prop = position_propagator(free_particle(), SlicingScheme(1.0, 16, **SMALL))
    assert oracle_error(prop, free_particle()) <= 1e-6


def test_mehler_oracle_improves_with_slices():
    H = harmonic()
    coarse = oracle_error(position_propagator(H, SlicingScheme(np.pi / 4, 32, **SMALL)), H)
    fine = oracle_error(position_propagator(H, SlicingScheme(np.pi / 4, 128, **SMALL)), H)
    assert fine < coarse / 10
    assert fine <= 1e-4


def test_small_time_limit_is_identity():
    prop = position_propagator(harmonic(), SlicingScheme(0.0, 4, **SMALL))
    assert np.array_equal(prop.unitary, np.eye(256))
    short = position_propagator(harmonic(), SlicingScheme(1e-6, 4, **SMALL))
    psi = gaussian_packets(short.grid, short.spacing)
    assert np.max(np.abs(short.apply(psi) - psi)) <= 1e-5


def test_free_momentum_kernel_is_diagonal():
    prop = momentum_propagator(free_particle(), SlicingScheme(1.3, 8, **SMALL))
    U = prop.unitary
    off = U - np.diag(np.diag(U))
    assert np.max(np.abs(off)) <= 1e-12
    expected = np.exp(-1j * prop.grid**2 / 2 * 1.3)
    assert np.allclose(np.diag(U), expected, atol=1e-12)


def test_harmonic_momentum_quarter_period():
    H = harmonic()
    T = np.pi / 2 - 0.3
    prop = momentum_propagator(H, SlicingScheme(T, 256, **SMALL))
    assert oracle_error(prop, H) <= 1e-4
    exact = momentum_propagator(H, SlicingScheme(T, 256, method="gaussian-exact", **SMALL))
    assert exact.representation == "momentum"


def test_phase_tables_scale_inversely_with_delta():
    x = np.linspace(-3, 3, 11)
    p = momentum_grid(11, x[1] - x[0], 1.0)
    for H in (harmonic(), quartic(), free_particle()):
        v1, t1 = phase_tables(H, x, p, 0.1, 1.0)
        v2, t2 = phase_tables(H, x, p, 0.1, 2.0)
        assert np.array_equal(v2, v1 / 2) and np.array_equal(t2, t1 / 2)
    with pytest.raises(ValueError):
        phase_tables(harmonic(), x, p, 0.1, 0.0)


def test_unitarity_and_composition():
    H = quartic()
    prop = position_propagator(H, SlicingScheme(0.5, 32, **SMALL))
    assert unitarity_error(prop) <= 1e-9
    a, b = SlicingScheme(0.3, 24, **SMALL), SlicingScheme(0.2, 16, **SMALL)
    assert composition_error(H, a, b) <= 1e-4


def test_non_separable_hamiltonian_rejected():
    H = PolynomialHamiltonian(1, {(1, 1): 1.0, (0, 2): 0.5})
    with pytest.raises(ValueError, match="unsupported"):
        position_propagator(H, SlicingScheme(1.0, 4, **SMALL))
    with pytest.raises(ValueError):
        momentum_propagator(H, SlicingScheme(1.0, 4, **SMALL))


def test_closed_form_limits():
    with pytest.raises(ValueError):
        closed_form_kernel(quartic(), 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        closed_form_kernel(harmonic(), 0.0, 0.0, np.pi)
    with pytest.raises(ValueError):
        closed_form_kernel(free_particle(), 0.0, 0.0, 0.0)


def test_gaussian_exact_method_matches_closed_form():
    H = harmonic()
    prop = position_propagator(H, SlicingScheme(0.5, 1, method="gaussian-exact", **SMALL))
    x = prop.grid
    assert np.allclose(prop.kernel, closed_form_kernel(H, x[:, None], x[None, :], 0.5))


@pytest.mark.parametrize("H", [free_particle(), harmonic()])
def test_fourier_duality(H):
    scheme = SlicingScheme(np.pi / 4, 64, **SMALL)
    res = fourier_duality_check(position_propagator(H, scheme), momentum_propagator(H, scheme))
    assert res <= 1e-3


def test_duality_zero_time_is_exact():
    scheme = SlicingScheme(0.0, 8, **SMALL)
    res = fourier_duality_check(position_propagator(harmonic(), scheme), momentum_propagator(harmonic(), scheme))
    assert res <= 1e-12


def test_duality_rejects_mismatched_inputs():
    a = position_propagator(harmonic(), SlicingScheme(0.5, 8, **SMALL))
    b = momentum_propagator(harmonic(), SlicingScheme(0.6, 8, **SMALL))
    with pytest.raises(ValueError):
        fourier_duality_check(a, b)
    with pytest.raises(ValueError):
        fourier_duality_check(b, a)


def test_trotter_ratios_near_four():
    rows = trotter_table(harmonic(), np.pi / 4, slices=(8, 16, 32), **SMALL)
    assert all(3.5 <= r <= 4.5 for _, _, r in rows[1:])


def test_scheme_validation():
    with pytest.raises(ValueError):
        SlicingScheme(1.0, 0)
    with pytest.raises(ValueError):
        SlicingScheme(-1.0, 4)
    with pytest.raises(ValueError):
        SlicingScheme(1.0, 4, x_range=(1.0, -1.0))
    with pytest.raises(ValueError):
        SlicingScheme(1.0, 4, method="euler")


def test_quantum_and_classical_spreading_contrast():
    out = run_variance_contrast(x_range=(-16, 16), n_points=256)
    # both reproduce σx² + (t/m)² σp², but the wave functions themselves differ
    assert out["quantum_relative_error"] <= 1e-8
    assert out["kvn_relative_error"] <= 1e-5
    assert min(out["quantum_pointwise_gap"]) > 1e-3
    assert max(out["kvn_density_l1"]) <= 1e-5
