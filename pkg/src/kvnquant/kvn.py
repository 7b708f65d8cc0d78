"""Koopman-von Neumann waves on a phase-space grid.

Waves are sampled on a periodic ``N_q x N_p`` grid with ``values[i, j] =
ψ(q_i, p_j)``. Evolution under ``i ∂_t ψ = L̂ ψ`` is done either by pulling the
initial samples back along exact characteristics (cubic-spline interpolation),
or by Strang-split spectral shifts for separable Hamiltonians.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .hamiltonian import PolynomialHamiltonian, _n_steps, flow_map

__all__ = [
    "KvNWave",
    "PhaseGrid",
    "classical_kernel_apply",
    "density_compatibility",
    "evolve_density",
    "evolve_kvn",
    "liouvillian_apply",
]

logger = logging.getLogger(__name__)

RESOLUTION_TOL = 1e-8


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform periodic grid over ``[q_min, q_max) x [p_min, p_max)``."""

    q_range: tuple[float, float]
    p_range: tuple[float, float]
    n_q: int
    n_p: int
    boundary: str = "zero"

    def __post_init__(self):
        for name, (lo, hi) in (("q_range", self.q_range), ("p_range", self.p_range)):
            if not hi > lo:
                raise ValueError(f"{name} must have positive extent, got {(lo, hi)}")
        if self.n_q < 16 or self.n_p < 16:
            raise ValueError(f"grid needs at least 16 points per axis, got {self.n_q}x{self.n_p}")
        if self.boundary != "zero":
            raise ValueError(f"unsupported boundary policy {self.boundary!r}")
        object.__setattr__(self, "q_range", tuple(float(x) for x in self.q_range))
        object.__setattr__(self, "p_range", tuple(float(x) for x in self.p_range))

    @classmethod
    def square(cls, half_width: float, n: int) -> "PhaseGrid":
        return cls((-half_width, half_width), (-half_width, half_width), n, n)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_q, self.n_p)

    @property
    def dq(self) -> float:
        return (self.q_range[1] - self.q_range[0]) / self.n_q

    @property
    def dp(self) -> float:
        return (self.p_range[1] - self.p_range[0]) / self.n_p

    @property
    def cell_area(self) -> float:
        return self.dq * self.dp

    @property
    def q(self) -> np.ndarray:
        return self.q_range[0] + self.dq * np.arange(self.n_q)

    @property
    def p(self) -> np.ndarray:
        return self.p_range[0] + self.dp * np.arange(self.n_p)

    def mesh(self) -> np.ndarray:
        """Points with shape ``(2, N_q, N_p)``."""
        return np.array(np.meshgrid(self.q, self.p, indexing="ij"))

    def sample(self, func) -> "KvNWave":
        Q, P = self.mesh()
        return KvNWave(self, np.asarray(func(Q, P), dtype=complex))

    def to_index(self, points: np.ndarray) -> np.ndarray:
        return np.array(
            [(points[0] - self.q_range[0]) / self.dq, (points[1] - self.p_range[0]) / self.dp]
        )


@dataclass
class KvNWave:
    grid: PhaseGrid
    values: np.ndarray
    support_violations: int = 0
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values have shape {self.values.shape}, grid is {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("wave contains non-finite samples")

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.density) * self.grid.cell_area))

    def normalized(self) -> "KvNWave":
        return replace(self, values=self.values / self.norm)

    def mean(self) -> np.ndarray:
        """Center of mass ``(<q>, <p>)`` of ``|ψ|²``."""
        rho = self.density
        Q, P = self.grid.mesh()
        total = rho.sum()
        return np.array([(rho * Q).sum() / total, (rho * P).sum() / total])

    def boundary_tail(self) -> float:
        """Largest ``|ψ|`` on the outermost grid rows and columns, relative to the peak."""
        v = np.abs(self.values)
        edge = max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max())
        peak = v.max()
        return float(edge / peak) if peak > 0 else 0.0


def _gaussian_wave(grid: PhaseGrid, center, width: float = 1.0, momentum_phase=(0.0, 0.0)):
    """Normalised Gaussian KvN wave; convenience for tests and the CLI."""
    q0, p0 = center
    kq, kp = momentum_phase

    def f(Q, P):
        return np.exp(-((Q - q0) ** 2 + (P - p0) ** 2) / (2 * width**2) + 1j * (kq * Q + kp * P))

    return grid.sample(f).normalized()


def _wavenumbers(n: int, spacing: float) -> np.ndarray:
    return 2 * np.pi * np.fft.fftfreq(n, d=spacing)


def _spectral_tail(values: np.ndarray) -> float:
    spec = np.abs(np.fft.fft2(values)) ** 2
    total = spec.sum()
    if total == 0:
        return 0.0
    kq = np.abs(np.fft.fftfreq(values.shape[0]))[:, None]
    kp = np.abs(np.fft.fftfreq(values.shape[1]))[None, :]
    outer = (kq > 1 / 3) | (kp > 1 / 3)
    return float(spec[outer].sum() / total)


def liouvillian_apply(H: PolynomialHamiltonian, psi: KvNWave) -> KvNWave:
    """``L̂ψ = (−i ∂_pH ∂_q + i ∂_qH ∂_p) ψ`` with spectral derivatives."""
    if H.n != 1:
        raise ValueError("KvN grids are two-dimensional; need n = 1")
    g = psi.grid
    warnings = []
    tail = _spectral_tail(psi.values)
    if tail > RESOLUTION_TOL:
        warnings.append(f"unresolved wave: spectral tail {tail:.3e} > {RESOLUTION_TOL:g}")
    kq = _wavenumbers(g.n_q, g.dq)[:, None]
    kp = _wavenumbers(g.n_p, g.dp)[None, :]
    spec = np.fft.fft2(psi.values)
    d_q = np.fft.ifft2(1j * kq * spec)
    d_p = np.fft.ifft2(1j * kp * spec)
    mesh = g.mesh()
    grad = H.gradient(mesh)
    out = -1j * grad[1] * d_q + 1j * grad[0] * d_p
    return KvNWave(g, out, warnings=warnings)


def _backward_points(H, grid: PhaseGrid, T: float, dt: float) -> np.ndarray:
    return flow_map(H, grid.mesh(), -T, dt)


def _pull_back(values: np.ndarray, grid: PhaseGrid, points: np.ndarray):
    idx = grid.to_index(points)
    outside = (
        (idx[0] < 0) | (idx[0] > grid.n_q - 1) | (idx[1] < 0) | (idx[1] > grid.n_p - 1)
    )
    out = ndimage.map_coordinates(values, idx, order=3, mode="constant", cval=0.0)
    out[outside] = 0.0
    return out, int(outside.sum())


def _characteristics(H, psi0: KvNWave, T: float, dt: float, points=None) -> KvNWave:
    if T == 0:
        return replace(psi0, values=psi0.values.copy(), warnings=list(psi0.warnings))
    if points is None:
        points = _backward_points(H, psi0.grid, T, dt)
    values, violations = _pull_back(psi0.values, psi0.grid, points)
    warnings = []
    if violations:
        warnings.append(f"{violations} characteristics left the grid")
        logger.debug("%d backward characteristics left the grid", violations)
    return KvNWave(psi0.grid, values, support_violations=violations, warnings=warnings)


def _spectral_split(H, psi0: KvNWave, T: float, dt: float) -> KvNWave:
    kinetic, potential = H.split()
    g = psi0.grid
    steps = _n_steps(T, dt)
    if steps == 0:
        return replace(psi0, values=psi0.values.copy())
    h = T / steps
    Q, P = g.mesh()
    # dq/dt = T'(p), dp/dt = -V'(q)
    velocity = kinetic.gradient(np.array([Q, P]))[1]
    force = -potential.gradient(np.array([Q, P]))[0]
    kq = _wavenumbers(g.n_q, g.dq)[:, None]
    kp = _wavenumbers(g.n_p, g.dp)[None, :]
    half_drift = np.exp(-1j * kq * velocity * (0.5 * h))
    kick = np.exp(-1j * kp * force * h)
    psi = psi0.values
    for _ in range(steps):
        psi = np.fft.ifft(half_drift * np.fft.fft(psi, axis=0), axis=0)
        psi = np.fft.ifft(kick * np.fft.fft(psi, axis=1), axis=1)
        psi = np.fft.ifft(half_drift * np.fft.fft(psi, axis=0), axis=0)
    return KvNWave(g, psi)


def evolve_kvn(
    H: PolynomialHamiltonian,
    psi0: KvNWave,
    T: float,
    method: str = "characteristics",
    dt: float = 1e-2,
) -> KvNWave:
    """Solve ``i ∂_t ψ = L̂ ψ`` up to time ``T``.

    ``"characteristics"`` returns ``ψ0(Φ_{−T}(φ))`` on the grid (exact up to
    interpolation since ``L̂`` is first order); backward characteristics that
    leave the grid yield zero and are counted in ``support_violations``.
    ``"spectral-split"`` alternates spectral transport in ``q`` and ``p`` and
    needs ``H = T(p) + V(q)``.
    """
    if T < 0:
        raise ValueError(f"evolution time must be non-negative, got {T}")
    if H.n != 1:
        raise ValueError("KvN grids are two-dimensional; need n = 1")
    if method == "characteristics":
        return _characteristics(H, psi0, T, dt)
    if method == "spectral-split":
        return _spectral_split(H, psi0, T, dt)
    raise ValueError(f"unknown method {method!r}")


def classical_kernel_apply(H: PolynomialHamiltonian, psi0: KvNWave, T: float, dt: float = 1e-2) -> KvNWave:
    """Apply the delta-function kernel ``δ[φ_f − φ_cl(T; φ_i)]``.

    Integrating the delta against ``ψ0`` pulls the wave back along the classical
    trajectory, which is exactly the characteristics transport.
    """
    return evolve_kvn(H, psi0, T, method="characteristics", dt=dt)


def evolve_density(
    H: PolynomialHamiltonian, rho0: np.ndarray, grid: PhaseGrid, T: float, dt: float = 1e-2, points=None
) -> np.ndarray:
    """Liouville transport of a real density sampled on ``grid``."""
    rho0 = np.asarray(rho0, dtype=float)
    if rho0.shape != grid.shape:
        raise ValueError("density does not match grid")
    if T == 0:
        return rho0.copy()
    if points is None:
        points = _backward_points(H, grid, T, dt)
    values, _ = _pull_back(rho0, grid, points)
    return values


def density_compatibility(H: PolynomialHamiltonian, psi0: KvNWave, T: float, dt: float = 1e-2) -> dict:
    """Compare ``|ψ(T)|²`` with the separately transported ``ρ(T)`` from ``ρ0 = |ψ0|²``.

    Both transports share one set of backward characteristics; the wave is
    interpolated before squaring, the density after.
    """
    points = _backward_points(H, psi0.grid, T, dt) if T > 0 else None
    psi_T = _characteristics(H, psi0, T, dt, points=points)
    rho_T = evolve_density(H, psi0.density, psi0.grid, T, dt=dt, points=points)
    area = psi0.grid.cell_area
    return {
        "l1_distance": float(np.sum(np.abs(psi_T.density - rho_T)) * area),
        "norm_initial": psi0.norm,
        "norm_final": psi_T.norm,
        "norm_drift": abs(psi_T.norm - psi0.norm),
        "mass_initial": float(psi0.density.sum() * area),
        "mass_final": float(rho_T.sum() * area),
        "support_violations": psi_T.support_violations,
    }
