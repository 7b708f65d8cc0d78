import numpy as np
import pytest

from kvnquant.hamiltonian import (
    PolynomialHamiltonian,
    SymplecticForm,
    finite_difference_jacobian,
    flow_map,
    free_particle,
    hamiltonian_vector_field,
    harmonic,
    integrate_flow,
    quartic,
)


def test_symplectic_form_blocks():
    w = SymplecticForm(2).matrix
    assert np.array_equal(w, -w.T)
    assert np.array_equal(w @ w, -np.eye(4))


def test_vector_field_examples():
    assert np.allclose(hamiltonian_vector_field(harmonic(), [1.0, 0.0]), [0.0, -1.0])
    assert np.allclose(hamiltonian_vector_field(free_particle(), [0.3, 0.7]), [0.7, 0.0])
    assert np.allclose(hamiltonian_vector_field(quartic(), [1.0, 0.0]), [0.0, -2.0])


def test_exact_derivatives_and_vanishing_third_for_quadratic():
    H = PolynomialHamiltonian(1, {(3, 1): 2.0, (0, 2): 0.5})
    phi = np.array([0.7, -1.3])
    q, p = phi
    assert H.value(phi) == pytest.approx(2 * q**3 * p + 0.5 * p**2)
    assert np.allclose(H.gradient(phi), [6 * q**2 * p, 2 * q**3 + p])
    assert np.allclose(H.hessian(phi), [[12 * q * p, 6 * q**2], [6 * q**2, 1.0]])
    assert np.all(harmonic(2.0, 3.0).third_derivative(phi) == 0)


def test_from_pairs_roundtrip_and_errors():
    H = PolynomialHamiltonian.from_pairs([[[0, 2], 0.5], [[2, 0], 0.5]])
    assert H == harmonic()
    assert PolynomialHamiltonian.from_pairs(H.to_pairs()) == H
    with pytest.raises(ValueError):
        PolynomialHamiltonian.from_pairs([[[0, 2, 1], 1.0]])
    with pytest.raises(ValueError):
        PolynomialHamiltonian.from_pairs([])


def test_harmonic_quarter_period():
    traj = integrate_flow(harmonic(), [1.0, 0.0], np.pi / 2, 1e-3)
    assert np.allclose(traj.final, [0.0, -1.0], atol=1e-8)


def test_free_particle_linear_motion():
    traj = integrate_flow(free_particle(), [0.0, 1.0], 2.0, 1e-3)
    assert np.allclose(traj.final, [2.0, 1.0], atol=1e-12)


def test_harmonic_monodromy_is_rotation():
    T = np.pi / 2
    traj = integrate_flow(harmonic(), [1.0, 0.0], T, 1e-3, with_tangent=True)
    expected = np.array([[np.cos(T), np.sin(T)], [-np.sin(T), np.cos(T)]])
    assert np.allclose(traj.final_tangent, expected, atol=1e-9)
    assert np.array_equal(traj.tangent[0], np.eye(2))


@pytest.mark.parametrize(
    "H, T, tol",
    [(harmonic(), 1.0, 1e-6), (free_particle(), 3.0, 1e-8), (quartic(), 1.0, 1e-5)],
)
def test_finite_difference_matches_tangent(H, T, tol):
    phi0 = [0.4, -0.8]
    M = integrate_flow(H, phi0, T, 1e-3, with_tangent=True).final_tangent
    fd = finite_difference_jacobian(H, phi0, T, 1e-3, eps=1e-5)
    assert np.max(np.abs(M - fd)) <= tol


def test_free_particle_jacobian_exact():
    # RK4 is exact on linear flow; a coarse step keeps roundoff below 1e-9
    fd = finite_difference_jacobian(free_particle(), [0.4, -0.8], 3.0, 0.1, eps=1e-5)
    assert np.max(np.abs(fd - [[1.0, 3.0], [0.0, 1.0]])) <= 1e-9


def test_symplectic_tangent_and_unit_determinant():
    H = quartic()
    M = integrate_flow(H, [1.0, 0.5], 10.0, 1e-3, with_tangent=True).final_tangent
    w = SymplecticForm(1).matrix
    assert np.max(np.abs(M.T @ w @ M - w)) <= 1e-6
    assert abs(np.linalg.det(M) - 1) <= 1e-6


def test_rk4_energy_error_ratio_near_sixteen():
    H = quartic()
    phi0 = np.array([1.0, 0.5])
    errs = []
    for dt in (0.0125, 0.00625):
        traj = integrate_flow(H, phi0, 5.0, dt)
        errs.append(np.max(np.abs(H.value(traj.states.T) - H.value(phi0))))
    assert 12 <= errs[0] / errs[1] <= 20


def test_leapfrog_cross_check():
    a = flow_map(harmonic(), np.array([1.0, 0.0]), 1.0, 1e-3, method="leapfrog")
    b = flow_map(harmonic(), np.array([1.0, 0.0]), 1.0, 1e-3)
    assert np.allclose(a, b, atol=1e-6)


def test_step_validation():
    with pytest.raises(ValueError):
        integrate_flow(harmonic(), [1.0, 0.0], 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate_flow(harmonic(), [1.0, 0.0], -1.0, 0.1)
    with pytest.raises(OverflowError):
        integrate_flow(harmonic(), [1.0, 0.0], 1e3, 1e-6)
