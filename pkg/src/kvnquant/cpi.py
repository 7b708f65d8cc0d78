"""Extended classical dynamics over ``(φ, λ, c, c̄)`` and transport of one-forms.

Ghosts are carried in numeric mode: each ``c^a`` and ``c̄_a`` is a coefficient
multiplying a fixed odd generator, so the equations of motion close on plain
vectors. ``λ`` is complex because the ghost bilinear enters its equation with a
factor ``i``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .hamiltonian import PolynomialHamiltonian, _n_steps, flow_map_with_tangent

__all__ = [
    "ChargeSeries",
    "ExtendedState",
    "ExtendedTrajectory",
    "OneFormField",
    "conserved_charges",
    "extended_flow",
    "lie_derivative_value",
    "transport_one_form",
]


@dataclass(frozen=True, eq=False)
class ExtendedState:
    """The extended multiplet at one time."""

    phi: np.ndarray
    lam: np.ndarray
    c: np.ndarray
    cbar: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        d = phi.shape[0] if phi.ndim else 0
        if phi.ndim != 1 or d % 2 or d == 0:
            raise ValueError(f"phi must be a vector of even length, got shape {phi.shape}")
        object.__setattr__(self, "phi", phi)
        for name in ("lam", "c", "cbar"):
            arr = np.asarray(getattr(self, name))
            arr = arr.astype(complex) if name == "lam" or np.iscomplexobj(arr) else arr.astype(float)
            if arr.shape != (d,):
                raise ValueError(f"{name} must have shape ({d},), got {arr.shape}")
            object.__setattr__(self, name, arr)

    @classmethod
    def zeros(cls, phi) -> "ExtendedState":
        phi = np.asarray(phi, dtype=float)
        z = np.zeros_like(phi)
        return cls(phi, z, z, z)

    @property
    def dim(self) -> int:
        return self.phi.shape[0]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.phi, self.lam, self.c, self.cbar]).astype(complex)

    @classmethod
    def from_vector(cls, y) -> "ExtendedState":
        y = np.asarray(y)
        d = y.shape[0] // 4
        return cls(y[:d].real, y[d : 2 * d], y[2 * d : 3 * d], y[3 * d :])


def _extended_rhs(H: PolynomialHamiltonian, y: np.ndarray) -> np.ndarray:
    # y has shape (4d, ...) complex
    d = H.dim
    n = H.n
    phi = y[:d].real
    lam, c, cb = y[d : 2 * d], y[2 * d : 3 * d], y[3 * d :]
    grad = H.gradient(phi)
    hess = H.hessian(phi)
    A = np.concatenate([hess[n:], -hess[:n]])  # A^a_b = ω^{ac} ∂_c∂_b H
    phidot = np.concatenate([grad[n:], -grad[:n]])
    cdot = np.einsum("ab...,b...->a...", A, c)
    cbdot = -np.einsum("a...,ab...->b...", cb, A)
    lamdot = -np.einsum("b...,ba...->a...", lam, A)
    if H.degree > 2:
        third = H.third_derivative(phi)
        wT = np.concatenate([third[n:], -third[:n]])  # ω^{ec} ∂_c∂_b∂_a H
        lamdot = lamdot - 1j * np.einsum("e...,eba...,b...->a...", cb, wT, c)
    return np.concatenate([phidot.astype(complex), lamdot, cdot, cbdot])


@dataclass
class ExtendedTrajectory:
    hamiltonian: PolynomialHamiltonian
    times: np.ndarray
    states: np.ndarray  # (K, 4 * 2n) complex

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> ExtendedState:
        return ExtendedState.from_vector(self.states[k])

    @property
    def final(self) -> ExtendedState:
        return self.state(-1)


def extended_flow(
    H: PolynomialHamiltonian, s0: ExtendedState, T: float, dt: float, store_every: int = 1
) -> ExtendedTrajectory:
    """RK4 integration of the characteristic equations of ``ℋ̃``.

    ``dφ^a = ω^{ab}∂_bH``, ``dc^a = ω^{ac}∂_c∂_bH c^b``,
    ``dc̄_b = −c̄_a ω^{ac}∂_c∂_bH`` and
    ``dλ_a = −λ_b ω^{bc}∂_c∂_aH − i c̄_e ω^{ec}∂_c∂_b∂_aH c^b``.
    """
    if s0.dim != H.dim:
        raise ValueError(f"state has dimension {s0.dim}, Hamiltonian {H.dim}")
    steps = _n_steps(T, dt)
    h = T / steps if steps else 0.0
    y = s0.to_vector()
    times = [0.0]
    states = [y]
    f = lambda v: _extended_rhs(H, v)  # noqa: E731
    for k in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (k + 1) % store_every == 0 or k + 1 == steps:
            times.append((k + 1) * h)
            states.append(y)
    return ExtendedTrajectory(H, np.array(times), np.array(states))


def lie_derivative_value(H: PolynomialHamiltonian, s: ExtendedState) -> complex:
    """``ℋ̃ = λ_a ω^{ab} ∂_b H + i c̄_a ω^{ac} (∂_c∂_bH) c^b`` with numeric ghosts."""
    return complex(_lie_values(H, s.to_vector()[:, None])[0])


def _lie_values(H: PolynomialHamiltonian, Y: np.ndarray) -> np.ndarray:
    # Y has shape (4d, K)
    d, n = H.dim, H.n
    phi = Y[:d].real
    lam, c, cb = Y[d : 2 * d], Y[2 * d : 3 * d], Y[3 * d :]
    grad = H.gradient(phi)
    hess = H.hessian(phi)
    wgrad = np.concatenate([grad[n:], -grad[:n]])
    A = np.concatenate([hess[n:], -hess[:n]])
    return np.einsum("ak,ak->k", lam, wgrad) + 1j * np.einsum("ak,abk,bk->k", cb, A, c)


@dataclass
class ChargeSeries:
    times: np.ndarray
    lie_hamiltonian: np.ndarray
    ghost_pairing: np.ndarray
    Q: np.ndarray
    Qbar: np.ndarray

    def drift(self) -> dict[str, float]:
        """Largest deviation of each charge from its initial value."""
        out = {}
        for name in ("lie_hamiltonian", "ghost_pairing", "Q", "Qbar"):
            series = getattr(self, name)
            out[name] = float(np.max(np.abs(series - series[0]))) if len(series) else 0.0
        return out

    @property
    def max_drift(self) -> float:
        return max(self.drift().values())

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            for line in header_comment.splitlines():
                buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "re_lie", "im_lie", "ghost_pairing", "re_Q", "im_Q", "re_Qbar", "im_Qbar"])
        for k in range(len(self.times)):
            w.writerow(
                [
                    repr(float(self.times[k])),
                    repr(float(self.lie_hamiltonian[k].real)),
                    repr(float(self.lie_hamiltonian[k].imag)),
                    repr(float(self.ghost_pairing[k].real)),
                    repr(float(self.Q[k].real)),
                    repr(float(self.Q[k].imag)),
                    repr(float(self.Qbar[k].real)),
                    repr(float(self.Qbar[k].imag)),
                ]
            )
        return buf.getvalue()


def conserved_charges(traj: ExtendedTrajectory) -> ChargeSeries:
    """``ℋ̃``, ``c̄_a c^a``, ``Q = i c^a λ_a`` and ``Q̄ = i c̄_a ω^{ab} λ_b`` along a trajectory.

    ``Q`` and ``Q̄`` are conserved for quadratic Hamiltonians in numeric ghost
    mode; for higher degree their ghost-cubic terms only cancel for genuinely
    anticommuting ghosts.
    """
    H = traj.hamiltonian
    d, n = H.dim, H.n
    Y = traj.states.T
    lam, c, cb = Y[d : 2 * d], Y[2 * d : 3 * d], Y[3 * d :]
    wlam = np.concatenate([lam[n:], -lam[:n]])
    return ChargeSeries(
        traj.times,
        _lie_values(H, Y),
        np.einsum("ak,ak->k", cb, c),
        1j * np.einsum("ak,ak->k", c, lam),
        1j * np.einsum("ak,ak->k", cb, wlam),
    )


class OneFormField:
    """Field ``ψ_a(φ) dφ^a`` given by a pointwise evaluator.

    ``evaluate(points)`` takes points of shape ``(2n, ...)`` and returns
    coefficients of the same shape.
    """

    degree = 1

    def __init__(self, dim: int, evaluate: Callable[[np.ndarray], np.ndarray]):
        self.dim = dim
        self._evaluate = evaluate

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.shape[0] != self.dim:
            raise ValueError(f"points must have leading dimension {self.dim}")
        return np.asarray(self._evaluate(points))

    @classmethod
    def from_polynomials(cls, coefficients: Sequence[PolynomialHamiltonian]) -> "OneFormField":
        dim = coefficients[0].dim
        if len(coefficients) != dim:
            raise ValueError(f"need {dim} coefficient polynomials, got {len(coefficients)}")

        def ev(x):
            return np.array([np.broadcast_to(p.value(x), x.shape[1:]) for p in coefficients])

        return cls(dim, ev)

    @classmethod
    def exact(cls, f: PolynomialHamiltonian) -> "OneFormField":
        """``df`` for a polynomial ``f``."""
        return cls.from_polynomials([f.derivative(a) for a in range(f.dim)])


def transport_one_form(
    H: PolynomialHamiltonian, psi: OneFormField, T: float, dt: float = 1e-3
) -> OneFormField:
    """Finite-time Lie-derivative evolution of a one-form.

    ``(ψ_T)_a(φ) = ψ_b(Φ_{−T}(φ)) ∂Φ_{−T}^b / ∂φ^a``, the pullback along the
    backward flow.
    """
    if psi.dim != H.dim:
        raise ValueError("form and Hamiltonian dimensions differ")
    if T == 0:
        return psi

    def ev(x):
        back, M = flow_map_with_tangent(H, x, -T, dt)
        coeffs = psi(back)
        return np.einsum("b...,ba...->a...", coeffs, M)

    return OneFormField(psi.dim, ev)
