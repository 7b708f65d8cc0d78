"""Time-sliced quantum propagators on a periodic grid.

Conventions, fixed in one place:

* positions ``x_k = x_lo + k dx`` with ``dx = (x_hi - x_lo) / M``;
* momenta ``p_j = 2πΔ (j - M/2) / (M dx)`` in ascending order;
* ``F[j, k] = exp(-i p_j x_k / Δ) / sqrt(M)`` is unitary and maps normalised
  position amplitudes (``Σ|ψ|² dx = 1``) to normalised momentum amplitudes;
* kernels are reported with continuum normalisation, ``K = U / dx`` in the
  position representation and ``K = U / dp`` in the momentum representation.

The action scale ``Δ`` plays the role of ``ħ`` and is an explicit argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import PolynomialHamiltonian

__all__ = [
    "Propagator",
    "SlicingScheme",
    "closed_form_kernel",
    "composition_error",
    "fourier_duality_check",
    "fourier_matrix",
    "momentum_grid",
    "momentum_propagator",
    "oracle_error",
    "phase_tables",
    "position_propagator",
    "resolved_basis",
    "trotter_table",
    "unitarity_error",
]


@dataclass(frozen=True)
class SlicingScheme:
    time: float
    n_slices: int = 256
    x_range: tuple[float, float] = (-20.0, 20.0)
    n_points: int = 1024
    method: str = "split-operator"

    def __post_init__(self):
        if self.n_slices < 1:
            raise ValueError(f"need at least one slice, got {self.n_slices}")
        if self.time < 0:
            raise ValueError(f"propagation time must be non-negative, got {self.time}")
        lo, hi = self.x_range
        if not hi > lo:
            raise ValueError(f"x_range must have positive extent, got {self.x_range}")
        if self.n_points < 2:
            raise ValueError("need at least two grid points")
        if self.method not in ("split-operator", "gaussian-exact"):
            raise ValueError(f"unknown evaluation method {self.method!r}")
        object.__setattr__(self, "x_range", (float(lo), float(hi)))

    @property
    def dt(self) -> float:
        return self.time / self.n_slices

    @property
    def dx(self) -> float:
        return (self.x_range[1] - self.x_range[0]) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_range[0] + self.dx * np.arange(self.n_points)


def momentum_grid(n_points: int, dx: float, delta: float) -> np.ndarray:
    return 2 * np.pi * delta * (np.arange(n_points) - n_points // 2) / (n_points * dx)


def fourier_matrix(x: np.ndarray, p: np.ndarray, delta: float) -> np.ndarray:
    return np.exp(-1j * np.outer(p, x) / delta) / np.sqrt(len(x))


@dataclass
class Propagator:
    representation: str
    grid: np.ndarray
    unitary: np.ndarray = field(repr=False)
    spacing: float
    n_slices: int
    delta: float
    time: float

    @property
    def kernel(self) -> np.ndarray:
        """``K(x_f, T | x_i)`` samples, rows indexed by the final point."""
        return self.unitary / self.spacing

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.unitary @ psi


def _split_check(H: PolynomialHamiltonian):
    if H.n != 1:
        raise ValueError("propagators are implemented for one degree of freedom")
    if not H.is_separable():
        raise ValueError("unsupported Hamiltonian: split-operator slicing needs H = T(p) + V(q)")
    return H.split()


def phase_tables(H: PolynomialHamiltonian, x, p, dt: float, delta: float):
    """Per-slice phase increments ``(-V(x) dt / Δ, -T(p) dt / Δ)``.

    The raw increments are formed first and divided by ``Δ`` last, so doubling
    ``Δ`` halves every entry exactly.
    """
    if not delta > 0:
        raise ValueError(f"action scale Δ must be positive, got {delta}")
    kinetic, potential = _split_check(H)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    zeros_x, zeros_p = np.zeros_like(x), np.zeros_like(p)
    v_inc = -(potential.value(np.array([x, zeros_x])) * dt)
    t_inc = -(kinetic.value(np.array([zeros_p, p])) * dt)
    return v_inc / delta, t_inc / delta


def _closed_form_parameters(H: PolynomialHamiltonian, representation: str = "position"):
    allowed = {(0, 2), (2, 0)}
    if H.n != 1 or not set(H.terms) <= allowed or (0, 2) not in H.terms:
        raise ValueError("closed-form kernel needs H = p^2/(2m) + m w^2 q^2 / 2")
    mass = 1.0 / (2.0 * H.terms[(0, 2)])
    k = 2.0 * H.terms.get((2, 0), 0.0)
    if k < 0:
        raise ValueError("inverted oscillator has no Mehler kernel here")
    omega = np.sqrt(k / mass)
    if representation == "momentum":
        if omega == 0.0:
            raise ValueError("the free momentum kernel is a delta function")
        # in p-space the oscillator has the same form with mass 1 / (m w^2)
        mass = 1.0 / (mass * omega**2)
    return mass, omega


def closed_form_kernel(
    H: PolynomialHamiltonian, xf, xi, T: float, delta: float = 1.0, representation: str = "position"
):
    """Free or Mehler kernel ``K(x_f, T | x_i)`` for quadratic ``H``.

    Valid for ``0 < ωT < π``; the prefactor uses the principal branch of
    ``sqrt(1 / i)``. In the momentum representation the oscillator kernel is
    the Mehler form with mass ``1 / (m ω²)``.
    """
    mass, omega = _closed_form_parameters(H, representation)
    xf, xi = np.asarray(xf, dtype=float), np.asarray(xi, dtype=float)
    if omega == 0.0:
        if T <= 0:
            raise ValueError("closed-form kernel needs T > 0")
        pref = np.sqrt(mass / (2j * np.pi * delta * T))
        return pref * np.exp(1j * mass * (xf - xi) ** 2 / (2 * delta * T))
    s = np.sin(omega * T)
    if not (0 < omega * T < np.pi):
        raise ValueError("Mehler kernel implemented for 0 < wT < pi")
    pref = np.sqrt(mass * omega / (2j * np.pi * delta * s))
    phase = mass * omega * ((xf**2 + xi**2) * np.cos(omega * T) - 2 * xf * xi) / (2 * delta * s)
    return pref * np.exp(1j * phase)


def _identity_propagator(rep, grid, spacing, scheme, delta):
    return Propagator(rep, grid, np.eye(len(grid), dtype=complex), spacing, scheme.n_slices, delta, 0.0)


def position_propagator(H: PolynomialHamiltonian, scheme: SlicingScheme, delta: float = 1.0) -> Propagator:
    """``<x_f| U(T) |x_i>`` from Strang slices ``e^{-iV dt/2Δ} e^{-iT dt/Δ} e^{-iV dt/2Δ}``.

    Each slice carries the phase ``(p Δx − H dt) / Δ`` of the frozen superspace
    action; the kinetic factor is applied in the momentum basis.
    """
    x = scheme.x
    p = momentum_grid(scheme.n_points, scheme.dx, delta)
    if scheme.method == "gaussian-exact":
        K = closed_form_kernel(H, x[:, None], x[None, :], scheme.time, delta)
        return Propagator("position", x, K * scheme.dx, scheme.dx, scheme.n_slices, delta, scheme.time)
    if scheme.time == 0:
        _split_check(H)
        return _identity_propagator("position", x, scheme.dx, scheme, delta)
    v_phase, t_phase = phase_tables(H, x, p, scheme.dt, delta)
    F = fourier_matrix(x, p, delta)
    half_v = np.exp(0.5j * v_phase)
    step = (half_v[:, None] * (F.conj().T @ (np.exp(1j * t_phase)[:, None] * F))) * half_v[None, :]
    U = np.linalg.matrix_power(step, scheme.n_slices)
    return Propagator("position", x, U, scheme.dx, scheme.n_slices, delta, scheme.time)


def momentum_propagator(H: PolynomialHamiltonian, scheme: SlicingScheme, delta: float = 1.0) -> Propagator:
    """``<p_f| U(T) |p_i>`` with slices in the conjugate order.

    Each slice is ``e^{-iT dt/2Δ} e^{-iV dt/Δ} e^{-iT dt/2Δ}`` with the
    potential applied in the position basis, i.e. the sliced phase
    ``(−q Δp − H dt) / Δ`` of the momentum-representation action.
    """
    x = scheme.x
    p = momentum_grid(scheme.n_points, scheme.dx, delta)
    dp = p[1] - p[0]
    if scheme.method == "gaussian-exact":
        K = closed_form_kernel(H, p[:, None], p[None, :], scheme.time, delta, "momentum")
        return Propagator("momentum", p, K * dp, dp, scheme.n_slices, delta, scheme.time)
    if scheme.time == 0:
        _split_check(H)
        return _identity_propagator("momentum", p, dp, scheme, delta)
    v_phase, t_phase = phase_tables(H, x, p, scheme.dt, delta)
    F = fourier_matrix(x, p, delta)
    half_t = np.exp(0.5j * t_phase)
    step = (half_t[:, None] * (F @ (np.exp(1j * v_phase)[:, None] * F.conj().T))) * half_t[None, :]
    U = np.linalg.matrix_power(step, scheme.n_slices)
    return Propagator("momentum", p, U, dp, scheme.n_slices, delta, scheme.time)


def gaussian_packets(grid: np.ndarray, spacing: float, centers=(-2.0, 0.0, 2.0), kicks=(0.0, 1.5), width=1.0):
    """Normalised Gaussian test states (columns) on ``grid``."""
    cols = []
    for c in centers:
        for k in kicks:
            psi = np.exp(-((grid - c) ** 2) / (2 * width**2) + 1j * k * grid)
            cols.append(psi / np.sqrt(np.sum(np.abs(psi) ** 2) * spacing))
    return np.array(cols).T


def _kernel_phase_slope(H, xf, xi, T, delta, representation):
    """``|∂ phase / ∂ x_i|`` of the closed-form kernel."""
    mass, omega = _closed_form_parameters(H, representation)
    if omega == 0.0:
        return np.abs(mass * (xi - xf) / (delta * T))
    s, c = np.sin(omega * T), np.cos(omega * T)
    return np.abs(mass * omega * (xi * c - xf) / (delta * s))


def oracle_error(prop: Propagator, H: PolynomialHamiltonian, states: np.ndarray | None = None) -> float:
    """Largest pointwise gap between ``U ψ`` and the closed-form kernel integrated against ``ψ``.

    The closed-form side is a trapezoidal quadrature on the same grid. Only
    output points where the kernel's oscillation across the support of the test
    states stays below half the grid Nyquist rate are compared; there the
    quadrature is spectrally accurate.
    """
    if states is None:
        states = gaussian_packets(prop.grid, prop.spacing)
    g = prop.grid
    peak = np.abs(states).max()
    support = g[np.any(np.abs(states) > 1e-14 * peak, axis=1)]
    lo, hi = support.min(), support.max()
    slope = np.maximum(
        _kernel_phase_slope(H, g, lo, prop.time, prop.delta, prop.representation),
        _kernel_phase_slope(H, g, hi, prop.time, prop.delta, prop.representation),
    )
    rows = slope <= 0.5 * np.pi / prop.spacing
    if not rows.any():
        raise ValueError("grid too coarse to resolve the closed-form kernel anywhere")
    K = closed_form_kernel(H, g[rows, None], g[None, :], prop.time, prop.delta, prop.representation)
    exact = (K @ states) * prop.spacing
    return float(np.max(np.abs(prop.apply(states)[rows] - exact)))


def unitarity_error(prop: Propagator) -> float:
    U = prop.unitary
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def composition_error(H, scheme_1: SlicingScheme, scheme_2: SlicingScheme, delta: float = 1.0) -> float:
    """``max|U(T1) U(T2) − U(T1 + T2)|`` with the combined scheme using ``N1 + N2`` slices."""
    if scheme_1.x_range != scheme_2.x_range or scheme_1.n_points != scheme_2.n_points:
        raise ValueError("grid mismatch")
    both = SlicingScheme(
        scheme_1.time + scheme_2.time,
        scheme_1.n_slices + scheme_2.n_slices,
        scheme_1.x_range,
        scheme_1.n_points,
        scheme_1.method,
    )
    U1 = position_propagator(H, scheme_1, delta).unitary
    U2 = position_propagator(H, scheme_2, delta).unitary
    U = position_propagator(H, both, delta).unitary
    return float(np.max(np.abs(U1 @ U2 - U)))


def resolved_basis(x: np.ndarray, dx: float, n_states: int = 12, width: float = 1.0) -> np.ndarray:
    """Orthonormal columns spanning the first Hermite functions sampled on ``x``."""
    from numpy.polynomial.hermite_e import hermeval

    u = x / width
    cols = []
    for k in range(n_states):
        coeffs = np.zeros(k + 1)
        coeffs[k] = 1.0
        cols.append(hermeval(u, coeffs) * np.exp(-(u**2) / 4))
    Q, _ = np.linalg.qr(np.array(cols).T * np.sqrt(dx))
    return Q


def fourier_duality_check(
    K_pos: Propagator, K_mom: Propagator, basis: np.ndarray | None = None
) -> float:
    """Spectral-norm residual ``‖F U_pos F⁻¹ − U_mom‖`` on the grid.

    With ``basis`` (orthonormal position-space columns) the norm is taken on that
    subspace only; the default is the span of the first Hermite functions, where
    both slicings are resolved. Pass ``basis=False`` for the full operator norm.
    """
    if K_pos.representation != "position" or K_mom.representation != "momentum":
        raise ValueError("expected a position kernel and a momentum kernel")
    n = len(K_pos.grid)
    p_expected = momentum_grid(n, K_pos.spacing, K_pos.delta)
    if len(K_mom.grid) != n or not np.allclose(K_mom.grid, p_expected, rtol=1e-12, atol=1e-12):
        raise ValueError("grid mismatch between position and momentum kernels")
    if K_pos.delta != K_mom.delta or K_pos.time != K_mom.time:
        raise ValueError("kernels differ in Δ or T")
    F = fourier_matrix(K_pos.grid, K_mom.grid, K_pos.delta)
    diff = F @ K_pos.unitary @ F.conj().T - K_mom.unitary
    if basis is False:
        return float(np.linalg.norm(diff, 2))
    if basis is None:
        basis = resolved_basis(K_pos.grid, K_pos.spacing)
    return float(np.linalg.norm(diff @ (F @ basis), 2))


def trotter_table(H: PolynomialHamiltonian, time: float, slices=(8, 16, 32, 64), x_range=(-20.0, 20.0), n_points=1024, delta=1.0):
    """Rows ``(N, error, ratio)`` of closed-form error under slice doubling."""
    rows = []
    prev = None
    for N in slices:
        prop = position_propagator(H, SlicingScheme(time, N, x_range, n_points), delta)
        err = oracle_error(prop, H)
        rows.append((N, err, prev / err if prev is not None else float("nan")))
        prev = err
    return rows
