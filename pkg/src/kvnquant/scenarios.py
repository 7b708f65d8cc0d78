"""Randomised instances and the verification suites shared by the CLI and tests.

Each ``run_*`` function returns plain dictionaries of numbers so callers can
serialise them directly. None of them looks at wall-clock time; outputs only
depend on the arguments and the seed.
"""

from __future__ import annotations

import numpy as np

from .cpi import ExtendedState, conserved_charges, extended_flow
from .hamiltonian import PolynomialHamiltonian, finite_difference_jacobian, flow_map, free_particle, integrate_flow
from .kvn import PhaseGrid, _backward_points, _characteristics, _gaussian_wave, evolve_density
from .propagator import SlicingScheme, position_propagator
from .superfield import Multiplet, berezin_bridge, classical_action, discretized_superaction, expand_hamiltonian

__all__ = [
    "random_extended_state",
    "random_hamiltonian",
    "random_path",
    "run_action_instance",
    "run_charge_scenario",
    "run_hamiltonian_instance",
    "run_kvn_scenario",
    "run_tangent_scenario",
    "run_variance_contrast",
]


def random_hamiltonian(rng: np.random.Generator, max_n: int = 2, max_degree: int = 6, max_terms: int = 6):
    """Polynomial with ``1..max_terms`` monomials of total degree ``1..max_degree``."""
    n = int(rng.integers(1, max_n + 1))
    terms = {}
    for _ in range(int(rng.integers(1, max_terms + 1))):
        deg = int(rng.integers(1, max_degree + 1))
        # distribute the degree over 2n variables
        cuts = np.sort(rng.integers(0, deg + 1, size=2 * n - 1))
        exps = np.diff(np.concatenate([[0], cuts, [deg]]))
        terms[tuple(int(e) for e in exps)] = float(rng.normal())
    return PolynomialHamiltonian(n, terms)


def random_extended_state(rng: np.random.Generator, dim: int, scale: float = 1.0) -> ExtendedState:
    return ExtendedState(
        scale * rng.normal(size=dim),
        rng.normal(size=dim) + 1j * rng.normal(size=dim),
        rng.normal(size=dim),
        rng.normal(size=dim),
    )


def random_path(rng: np.random.Generator, dim: int, n_slices: int, scale: float = 1.0) -> list[ExtendedState]:
    """``n_slices + 1`` independent slice states (a sliced path need not be smooth)."""
    return [random_extended_state(rng, dim, scale) for _ in range(n_slices + 1)]


def run_hamiltonian_instance(seed_seq: np.random.SeedSequence, max_n: int = 2, max_degree: int = 6) -> dict:
    rng = np.random.default_rng(seed_seq)
    H = random_hamiltonian(rng, max_n, max_degree)
    s = random_extended_state(rng, H.dim)
    exp = expand_hamiltonian(H, Multiplet.from_state(s))
    return {
        "n": H.n,
        "degree": H.degree,
        "n_terms": len(H.terms),
        "residual": exp.residual,
        "relative_residual": exp.relative_residual,
    }


def run_action_instance(
    seed_seq: np.random.SeedSequence,
    max_n: int = 2,
    max_degree: int = 6,
    slice_range: tuple[int, int] = (3, 20),
) -> dict:
    """One random sliced path in a random representation.

    Reports the θθ̄ residual, the Berezin-integral residual against
    ``S̃ − surface term`` and whether the θ,θ̄ → 0 restriction equals the
    plain sliced action bit for bit.
    """
    rng = np.random.default_rng(seed_seq)
    H = random_hamiltonian(rng, max_n, max_degree)
    n_slices = int(rng.integers(slice_range[0], slice_range[1] + 1))
    representation = ("position", "momentum")[int(rng.integers(0, 2))]
    dt = float(rng.uniform(0.01, 0.2))
    path = random_path(rng, H.dim, n_slices)
    dec = discretized_superaction(H, path, dt, representation)
    integrated, restricted = berezin_bridge(dec.total)
    target = dec.lie_action - dec.surface_term
    scale = max(target.max_abs(), integrated.max_abs(), 1e-300)
    berezin_rel = integrated.max_abs_diff(target) / scale
    plain = classical_action(H, [s.phi for s in path], dt, representation)
    return {
        "n": H.n,
        "degree": H.degree,
        "n_slices": n_slices,
        "representation": representation,
        "residual": dec.residual,
        "relative_residual": max(dec.relative_residual, berezin_rel),
        "restriction_exact": bool(restricted.imag == 0.0 and restricted.real == plain),
    }


def run_tangent_scenario(H: PolynomialHamiltonian, phi0, T: float, dt: float, ghost0, fd_dt: float | None = None) -> dict:
    """Ghosts versus the monodromy matrix, and the monodromy versus finite differences."""
    phi0 = np.asarray(phi0, dtype=float)
    ghost0 = np.asarray(ghost0, dtype=float)
    traj = integrate_flow(H, phi0, T, dt, with_tangent=True)
    M = traj.final_tangent
    d = H.dim
    state = ExtendedState(phi0, np.zeros(d), ghost0, np.zeros(d))
    ext = extended_flow(H, state, T, dt, store_every=10**9).final
    fd = finite_difference_jacobian(H, phi0, T, fd_dt or dt)
    scale = max(1.0, float(np.max(np.abs(M))))
    return {
        "ghost_error": float(np.max(np.abs(ext.c - M @ ghost0))),
        "jacobian_error": float(np.max(np.abs(M - fd))) / scale,
        "monodromy_max": float(np.max(np.abs(M))),
        "phi_final": [float(x) for x in traj.final],
    }


def run_charge_scenario(H: PolynomialHamiltonian, state: ExtendedState, T: float, dt: float, store_every: int = 1):
    traj = extended_flow(H, state, T, dt, store_every=store_every)
    charges = conserved_charges(traj)
    return charges, charges.drift()


def run_kvn_scenario(
    H: PolynomialHamiltonian,
    center,
    T: float,
    dt: float = 1e-2,
    half_width: float = 6.0,
    n_points: int = 256,
    width: float = 2**-0.5,
) -> dict:
    """Evolve a Gaussian wave and its density on one grid; report compatibility and tracking.

    The expected center is the classical image of the initial center, which is
    the exact center of mass only for linear flows (quadratic ``H``).
    """
    grid = PhaseGrid.square(half_width, n_points)
    psi0 = _gaussian_wave(grid, center, width)
    points = _backward_points(H, grid, T, dt) if T > 0 else None
    psi_T = _characteristics(H, psi0, T, dt, points=points)
    rho_T = evolve_density(H, psi0.density, grid, T, dt=dt, points=points)
    expected = flow_map(H, np.asarray(center, dtype=float), T, min(dt, 1e-3))
    mean = psi_T.mean()
    cell = max(grid.dq, grid.dp)
    area = grid.cell_area
    return {
        "grid": grid,
        "psi0": psi0,
        "psi": psi_T,
        "rho": rho_T,
        "mean": mean,
        "expected_center": expected,
        "center_error_cells": float(np.max(np.abs(mean - expected)) / cell),
        "l1_distance": float(np.sum(np.abs(psi_T.density - rho_T)) * area),
        "norm_drift": abs(psi_T.norm - psi0.norm),
        "support_violations": psi_T.support_violations,
    }


def run_variance_contrast(
    mass: float = 1.0,
    sigma_x: float = 1.0,
    times=(0.5, 1.0, 1.5, 2.0),
    delta: float = 1.0,
    x_range=(-20.0, 20.0),
    n_points: int = 512,
    kvn_grid: PhaseGrid | None = None,
) -> dict:
    """Position spreading of a free Gaussian, quantum versus KvN.

    The quantum packet starts with ``σ_p = Δ / (2σ_x)``. The KvN wave starts as
    ``sqrt`` of the product Gaussian with the same ``σ_x`` and that matching
    momentum spread. Both position variances should follow
    ``σ_x² + (t/m)² σ_p²``. The quantum ``|ψ|²`` is nevertheless not carried
    along the characteristics of its own initial data (those have ``p = 0``,
    which leave ``|ψ0|²`` in place); the KvN density is.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be positive and increasing")
    H = free_particle(mass)
    sigma_p = delta / (2 * sigma_x)
    formula = sigma_x**2 + (times / mass) ** 2 * sigma_p**2

    scheme = SlicingScheme(1.0, 1, tuple(x_range), n_points)
    x, dx = scheme.x, scheme.dx
    psi = np.exp(-(x**2) / (4 * sigma_x**2)).astype(complex)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * dx)
    rho0_x = np.abs(psi) ** 2
    q_var, q_gap = [], []
    prev = 0.0
    for t in times:
        # the free split is exact, so one slice per interval suffices
        step = position_propagator(H, SlicingScheme(float(t - prev), 1, tuple(x_range), n_points), delta)
        psi = step.apply(psi)
        prev = t
        dens = np.abs(psi) ** 2
        q_var.append(float(np.sum(dens * x**2) * dx - (np.sum(dens * x) * dx) ** 2))
        q_gap.append(float(np.max(np.abs(dens - rho0_x))))

    grid = kvn_grid or PhaseGrid((-12.0, 12.0), (-6 * sigma_p, 6 * sigma_p), 256, 128)
    wave = grid.sample(
        lambda Q, P: np.exp(-(Q**2) / (4 * sigma_x**2) - P**2 / (4 * sigma_p**2))
    ).normalized()
    k_var, k_l1 = [], []
    Q, _ = grid.mesh()
    for t in times:
        points = _backward_points(H, grid, float(t), 1e-2)
        out = _characteristics(H, wave, float(t), 1e-2, points=points)
        rho = evolve_density(H, wave.density, grid, float(t), points=points)
        dens = out.density
        total = dens.sum()
        mean = (dens * Q).sum() / total
        k_var.append(float((dens * Q**2).sum() / total - mean**2))
        k_l1.append(float(np.sum(np.abs(dens - rho)) * grid.cell_area))
    q_var, k_var = np.array(q_var), np.array(k_var)
    return {
        "times": times.tolist(),
        "formula": formula.tolist(),
        "quantum_variance": q_var.tolist(),
        "kvn_variance": k_var.tolist(),
        "quantum_relative_error": float(np.max(np.abs(q_var - formula) / formula)),
        "kvn_relative_error": float(np.max(np.abs(k_var - formula) / formula)),
        "quantum_pointwise_gap": q_gap,
        "kvn_density_l1": k_l1,
    }
