"""Polynomial Hamiltonians on 2n-dimensional phase space and their classical flow.

Phase-space points are ordered ``(q^1..q^n, p^1..p^n)``. Evaluation routines
accept either a single point (shape ``(2n,)``) or a batch laid out along the
first axis (shape ``(2n, ...)``); monomials are evaluated by explicit repeated
multiplication so scalar and vectorised calls give bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "PolynomialHamiltonian",
    "SymplecticForm",
    "Trajectory",
    "finite_difference_jacobian",
    "flow_map",
    "flow_map_with_tangent",
    "hamiltonian_vector_field",
    "harmonic",
    "free_particle",
    "quartic",
    "integrate_flow",
]

MAX_STEPS = 10_000_000


class SymplecticForm:
    """Standard symplectic matrix ``[[0, I], [-I, 0]]`` for ``n`` degrees of freedom."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"need at least one degree of freedom, got n={n}")
        self.n = n
        eye = np.eye(n, dtype=int)
        zero = np.zeros((n, n), dtype=int)
        self.matrix = np.block([[zero, eye], [-eye, zero]])
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return 2 * self.n

    def partner(self, a: int) -> tuple[int, int]:
        """``(b, sign)`` such that ``omega[a, b] == sign`` is the only nonzero in row ``a``."""
        n = self.n
        return (a + n, 1) if a < n else (a - n, -1)

    def __repr__(self) -> str:
        return f"SymplecticForm(n={self.n})"


class PolynomialHamiltonian:
    """Exact multivariate polynomial ``H(q, p)``.

    Parameters
    ----------
    n : int
        Degrees of freedom; the polynomial lives in ``2n`` variables.
    terms : mapping or iterable of pairs
        Exponent vector (length ``2n``) to real coefficient.
    """

    def __init__(self, n: int, terms: Mapping[Sequence[int], float] | Iterable):
        self.n = int(n)
        self.omega = SymplecticForm(self.n)
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean: dict[tuple[int, ...], float] = {}
        for exps, coeff in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != 2 * self.n:
                raise ValueError(
                    f"exponent vector {exps} has length {len(exps)}, expected {2 * self.n}"
                )
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            clean[exps] = clean.get(exps, 0.0) + float(coeff)
        self.terms = {e: c for e, c in sorted(clean.items()) if c != 0.0}

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence]) -> "PolynomialHamiltonian":
        """Build from ``[(exponents, coeff), ...]`` as written in config files."""
        pairs = [(tuple(e), c) for e, c in pairs]
        if not pairs:
            raise ValueError("empty Hamiltonian specification")
        dims = {len(e) for e, _ in pairs}
        if len(dims) != 1 or dims.pop() % 2:
            raise ValueError("exponent vectors must share one even length")
        return cls(len(pairs[0][0]) // 2, pairs)

    def to_pairs(self) -> list[list]:
        return [[list(e), c] for e, c in self.terms.items()]

    def __repr__(self) -> str:
        return f"PolynomialHamiltonian(n={self.n}, terms={self.terms!r})"

    def __eq__(self, other):
        if not isinstance(other, PolynomialHamiltonian):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, tuple(self.terms.items())))

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def scaled(self, factor: float) -> "PolynomialHamiltonian":
        return PolynomialHamiltonian(self.n, {e: c * factor for e, c in self.terms.items()})

    def is_separable(self) -> bool:
        """True when ``H = T(p) + V(q)`` with no mixed monomials."""
        n = self.n
        for e in self.terms:
            if any(e[:n]) and any(e[n:]):
                return False
        return True

    def split(self) -> tuple["PolynomialHamiltonian", "PolynomialHamiltonian"]:
        """``(T, V)`` with ``T`` depending on momenta only and ``V`` on positions only."""
        if not self.is_separable():
            raise ValueError("Hamiltonian has mixed q-p monomials; not separable")
        n = self.n
        kin = {e: c for e, c in self.terms.items() if any(e[n:])}
        pot = {e: c for e, c in self.terms.items() if not any(e[n:])}
        return PolynomialHamiltonian(n, kin), PolynomialHamiltonian(n, pot)

    def derivative(self, a: int) -> "PolynomialHamiltonian":
        out: dict[tuple[int, ...], float] = {}
        for e, c in self.terms.items():
            if e[a] == 0:
                continue
            new = list(e)
            new[a] -= 1
            out[tuple(new)] = out.get(tuple(new), 0.0) + c * e[a]
        return PolynomialHamiltonian(self.n, out)

    @cached_property
    def _grad(self) -> list["PolynomialHamiltonian"]:
        return [self.derivative(a) for a in range(self.dim)]

    @cached_property
    def _hess(self) -> list[list["PolynomialHamiltonian"]]:
        return [[g.derivative(b) for b in range(self.dim)] for g in self._grad]

    @cached_property
    def _third(self) -> list[list[list["PolynomialHamiltonian"]]]:
        return [[[h.derivative(c) for c in range(self.dim)] for h in row] for row in self._hess]

    def __call__(self, phi):
        return self.value(phi)

    def value(self, phi):
        """``H(phi)``; monomials by repeated multiplication, terms summed in sorted order."""
        phi = np.asarray(phi) if not isinstance(phi, (list, tuple)) else phi
        if len(phi) != self.dim:
            raise ValueError(f"expected {self.dim} phase-space coordinates, got {len(phi)}")
        total = 0.0 * phi[0]
        for exps, coeff in self.terms.items():
            mono = coeff
            for a, e in enumerate(exps):
                for _ in range(e):
                    mono = mono * phi[a]
            total = total + mono
        return total

    def gradient(self, phi) -> np.ndarray:
        return np.array([g.value(phi) for g in self._grad], dtype=float)

    def hessian(self, phi) -> np.ndarray:
        return np.array([[h.value(phi) for h in row] for row in self._hess], dtype=float)

    def third_derivative(self, phi) -> np.ndarray:
        return np.array(
            [[[t.value(phi) for t in col] for col in row] for row in self._third],
            dtype=float,
        )

    def vector_field(self, phi) -> np.ndarray:
        """``omega^{ab} d_b H``; batched input gives batched output."""
        grad = self.gradient(phi)
        n = self.n
        return np.concatenate([grad[n:], -grad[:n]])

    def flow_jacobian(self, phi) -> np.ndarray:
        """``A^a_b = omega^{ac} d_c d_b H`` at ``phi``."""
        hess = self.hessian(phi)
        n = self.n
        return np.concatenate([hess[n:], -hess[:n]])


def harmonic(mass: float = 1.0, frequency: float = 1.0) -> PolynomialHamiltonian:
    """``p^2/(2m) + m w^2 q^2 / 2``."""
    return PolynomialHamiltonian(
        1, {(0, 2): 0.5 / mass, (2, 0): 0.5 * mass * frequency**2}
    )


def free_particle(mass: float = 1.0) -> PolynomialHamiltonian:
    return PolynomialHamiltonian(1, {(0, 2): 0.5 / mass})


def quartic(coupling: float = 0.25) -> PolynomialHamiltonian:
    """``(p^2 + q^2)/2 + coupling q^4``."""
    return PolynomialHamiltonian(1, {(0, 2): 0.5, (2, 0): 0.5, (4, 0): coupling})


def hamiltonian_vector_field(H: PolynomialHamiltonian, phi) -> np.ndarray:
    return H.vector_field(np.asarray(phi, dtype=float))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    tangent: np.ndarray | None = field(default=None)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_tangent(self) -> np.ndarray:
        if self.tangent is None:
            raise ValueError("trajectory was integrated without the tangent map")
        return self.tangent[-1]


def _n_steps(T: float, dt: float) -> int:
    if dt <= 0:
        raise ValueError(f"step must be positive, got dt={dt}")
    if T < 0:
        raise ValueError(f"duration must be non-negative, got T={T}")
    steps = int(np.ceil(T / dt - 1e-9))
    if steps > MAX_STEPS:
        raise OverflowError(f"{steps} steps requested, limit is {MAX_STEPS}")
    return steps


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _leapfrog_step(H, y, h):
    T, V = H.split()
    n = H.n
    q, p = y[:n], y[n:]
    p = p - 0.5 * h * V.gradient(np.concatenate([q, p]))[:n]
    q = q + h * T.gradient(np.concatenate([q, p]))[n:]
    p = p - 0.5 * h * V.gradient(np.concatenate([q, p]))[:n]
    return np.concatenate([q, p])


def flow_map(H: PolynomialHamiltonian, phi, t: float, dt: float, method: str = "rk4"):
    """Endpoint of the flow for signed time ``t``; ``phi`` may be batched ``(2n, ...)``.

    The step is shrunk so that an integer number of steps lands exactly on ``t``.
    """
    y = np.array(phi, dtype=float)
    steps = _n_steps(abs(t), dt)
    if steps == 0:
        return y
    h = t / steps
    if method == "rk4":
        for _ in range(steps):
            y = _rk4_step(H.vector_field, y, h)
    elif method == "leapfrog":
        for _ in range(steps):
            y = _leapfrog_step(H, y, h)
    else:
        raise ValueError(f"unknown integrator {method!r}")
    return y


def flow_map_with_tangent(H: PolynomialHamiltonian, phi, t: float, dt: float):
    """Signed-time flow endpoint and Jacobian ``d phi(t) / d phi(0)``; batched over trailing axes."""
    phi = np.array(phi, dtype=float)
    d = H.dim
    M = np.broadcast_to(
        np.eye(d).reshape((d, d) + (1,) * (phi.ndim - 1)), (d, d) + phi.shape[1:]
    ).copy()
    steps = _n_steps(abs(t), dt)
    if steps == 0:
        return phi, M
    h = t / steps

    def f(y):
        x, J = y
        return H.vector_field(x), np.einsum("ab...,bc...->ac...", H.flow_jacobian(x), J)

    for _ in range(steps):
        k1 = f((phi, M))
        k2 = f((phi + 0.5 * h * k1[0], M + 0.5 * h * k1[1]))
        k3 = f((phi + 0.5 * h * k2[0], M + 0.5 * h * k2[1]))
        k4 = f((phi + h * k3[0], M + h * k3[1]))
        phi = phi + (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        M = M + (h / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    return phi, M


def integrate_flow(
    H: PolynomialHamiltonian,
    phi0,
    T: float,
    dt: float,
    with_tangent: bool = False,
    method: str = "rk4",
) -> Trajectory:
    """Fixed-step trajectory of Hamilton's equations from ``phi0`` over ``[0, T]``.

    With ``with_tangent`` the monodromy ``M(t) = d phi(t) / d phi(0)`` is
    co-integrated through ``dM/dt = A(phi(t)) M`` using the same RK4 stages.
    """
    phi0 = np.asarray(phi0, dtype=float)
    if phi0.shape != (H.dim,):
        raise ValueError(f"initial point must have shape ({H.dim},), got {phi0.shape}")
    steps = _n_steps(T, dt)
    h = T / steps if steps else 0.0
    d = H.dim
    times = np.linspace(0.0, T, steps + 1)
    states = np.empty((steps + 1, d))
    states[0] = phi0

    if with_tangent:
        if method != "rk4":
            raise ValueError("tangent co-integration is only available with rk4")
        tangents = np.empty((steps + 1, d, d))
        tangents[0] = np.eye(d)

        def f(y):
            phi, M = y[:d], y[d:].reshape(d, d)
            return np.concatenate([H.vector_field(phi), (H.flow_jacobian(phi) @ M).ravel()])

        y = np.concatenate([phi0, np.eye(d).ravel()])
        for k in range(steps):
            y = _rk4_step(f, y, h)
            states[k + 1] = y[:d]
            tangents[k + 1] = y[d:].reshape(d, d)
        return Trajectory(times, states, tangents)

    y = phi0.copy()
    for k in range(steps):
        if method == "rk4":
            y = _rk4_step(H.vector_field, y, h)
        elif method == "leapfrog":
            y = _leapfrog_step(H, y, h)
        else:
            raise ValueError(f"unknown integrator {method!r}")
        states[k + 1] = y
    return Trajectory(times, states)


def finite_difference_jacobian(
    H: PolynomialHamiltonian, phi0, T: float, dt: float, eps: float = 1e-5
) -> np.ndarray:
    """Central-difference estimate of ``d phi(T) / d phi(0)``."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    phi0 = np.asarray(phi0, dtype=float)
    d = H.dim
    # all 2d perturbed starts go through one batched integration
    shifts = np.concatenate([np.eye(d), -np.eye(d)], axis=1) * eps
    ends = flow_map(H, phi0[:, None] + shifts, T, dt)
    return (ends[:, :d] - ends[:, d:]) / (2 * eps)
