"""Superfields over ``(t, θ, θ̄)`` and the superspace form of the classical action.

A superfield packs one time slice of the extended multiplet into

    Φ^a = φ^a + θ c^a + θ̄ ω^{ab} c̄_b + i θ̄θ ω^{ab} λ_b

inside the Grassmann algebra generated by ``θ, θ̄, c^1..c^{2n}, c̄_1..c̄_{2n}``
(in that order). The θθ̄ component of ``H(Φ)`` is ``i`` times the Lie-derivative
Hamiltonian, and the θθ̄ component of the sliced action reproduces the extended
action minus an endpoint term. Both sides are computed by separate code paths
so the identities can be checked to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .cpi import ExtendedState
from .grassmann import GeneratorSet, GrassmannElement, berezin
from .hamiltonian import PolynomialHamiltonian, SymplecticForm

__all__ = [
    "ActionDecomposition",
    "HamiltonianExpansion",
    "Multiplet",
    "Superfield",
    "berezin_bridge",
    "classical_action",
    "discretized_superaction",
    "expand_hamiltonian",
    "freeze",
    "lie_hamiltonian_element",
    "nilpotent_remainder",
    "superspace",
]

THETA = "θ"
THETABAR = "θ̄"
TIME_PARTNERS = (THETA, THETABAR)


def ghost_name(a: int) -> str:
    return f"c^{a + 1}"


def antighost_name(a: int) -> str:
    return f"c̄_{a + 1}"


_SUPERSPACES: dict[int, GeneratorSet] = {}


def superspace(n: int) -> GeneratorSet:
    """Generator set ``θ, θ̄, c^1..c^{2n}, c̄_1..c̄_{2n}`` (shared per ``n``)."""
    if n not in _SUPERSPACES:
        names = [THETA, THETABAR]
        names += [ghost_name(a) for a in range(2 * n)]
        names += [antighost_name(a) for a in range(2 * n)]
        _SUPERSPACES[n] = GeneratorSet(names)
    return _SUPERSPACES[n]


@dataclass(frozen=True)
class Multiplet:
    """One time slice ``(φ, λ, c, c̄)`` with Grassmann-valued ghosts."""

    gens: GeneratorSet
    phi: tuple
    lam: tuple
    c: tuple
    cbar: tuple

    @property
    def dim(self) -> int:
        return len(self.phi)

    @classmethod
    def from_state(cls, state: ExtendedState, gens: GeneratorSet | None = None) -> "Multiplet":
        """Numeric ghost coefficients become multiples of the fixed generators ``c^a``, ``c̄_a``."""
        d = len(state.phi)
        gens = gens or superspace(d // 2)
        return cls(
            gens,
            tuple(float(x) for x in state.phi),
            tuple(complex(x) for x in state.lam),
            tuple(gens.gen(ghost_name(a), state.c[a]) for a in range(d)),
            tuple(gens.gen(antighost_name(a), state.cbar[a]) for a in range(d)),
        )

    def __post_init__(self):
        d = len(self.phi)
        if d % 2 or not d:
            raise ValueError(f"phase-space dimension must be even and positive, got {d}")
        for name, comp in (("lam", self.lam), ("c", self.c), ("cbar", self.cbar)):
            if comp is None or len(comp) != d:
                raise ValueError(f"multiplet component {name!r} missing or of wrong length")
        for comp in (*self.c, *self.cbar):
            if not isinstance(comp, GrassmannElement) or comp.gens is not self.gens:
                raise ValueError("ghost components must be elements of the multiplet's algebra")
            if not comp.is_odd():
                raise ValueError("ghost components must be odd elements")


def as_multiplet(item: Union[Multiplet, ExtendedState], gens: GeneratorSet | None = None) -> Multiplet:
    if isinstance(item, Multiplet):
        return item
    return Multiplet.from_state(item, gens)


class Superfield:
    """Components of ``Φ^a`` for every index ``a``.

    Stores ``φ^a``, the θ part ``c^a``, the θ̄ part ``ω^{ab} c̄_b`` and the
    ``iθ̄θ`` part ``ω^{ab} λ_b``.
    """

    def __init__(self, multiplet: Multiplet):
        d = multiplet.dim
        omega = SymplecticForm(d // 2)
        self.gens = multiplet.gens
        self.multiplet = multiplet
        self.phi = multiplet.phi
        self.theta_part = multiplet.c
        wc, wl = [], []
        for a in range(d):
            b, s = omega.partner(a)
            wc.append(s * multiplet.cbar[b])
            wl.append(s * multiplet.lam[b])
        self.thetabar_part = tuple(wc)
        self.lam_part = tuple(wl)
        theta = self.gens.gen(THETA)
        thetabar = self.gens.gen(THETABAR)
        tbt = thetabar * theta
        self._elements = tuple(
            self.phi[a]
            + theta * self.theta_part[a]
            + thetabar * self.thetabar_part[a]
            + (1j * self.lam_part[a]) * tbt
            for a in range(d)
        )

    @property
    def dim(self) -> int:
        return len(self.phi)

    def __getitem__(self, a: int) -> GrassmannElement:
        return self._elements[a]

    @property
    def elements(self) -> tuple[GrassmannElement, ...]:
        return self._elements

    def fluctuation(self, a: int) -> GrassmannElement:
        return self._elements[a] - self.phi[a]

    def frozen(self) -> tuple[float, ...]:
        """θ, θ̄ → 0."""
        return tuple(e.restrict(TIME_PARTNERS).scalar_part.real for e in self._elements)


def _theta_components(a: GrassmannElement):
    return (
        a.component((), TIME_PARTNERS),
        a.component((THETA,), TIME_PARTNERS),
        a.component((THETABAR,), TIME_PARTNERS),
        a.component((THETA, THETABAR), TIME_PARTNERS),
    )


def lie_hamiltonian_element(H: PolynomialHamiltonian, m: Multiplet) -> GrassmannElement:
    """``λ_a ω^{ab} ∂_b H + i c̄_a ω^{ac} (∂_c ∂_b H) c^b`` as an even algebra element."""
    d = m.dim
    if H.dim != d:
        raise ValueError(f"Hamiltonian has {H.dim} coordinates, multiplet {d}")
    omega = SymplecticForm(d // 2)
    phi = np.array(m.phi)
    grad = H.gradient(phi)
    hess = H.hessian(phi)
    out = m.gens.zero()
    for a in range(d):
        b, s = omega.partner(a)
        out = out + m.lam[a] * s * grad[b]
    for a in range(d):
        c_idx, s = omega.partner(a)
        for b in range(d):
            if hess[c_idx, b] != 0.0:
                out = out + (1j * s * hess[c_idx, b]) * (m.cbar[a] * m.c[b])
    return out


@dataclass
class HamiltonianExpansion:
    """``H(Φ) = H(φ) + θ T + θ̄ V + θθ̄ X`` together with the independent ``ℋ̃``."""

    full: GrassmannElement
    scalar: GrassmannElement
    theta: GrassmannElement
    thetabar: GrassmannElement
    thetathetabar: GrassmannElement
    lie_hamiltonian: GrassmannElement
    residual: float
    relative_residual: float


def _relative(diff: float, scale: float) -> float:
    return diff / scale if scale > 0 else diff


def expand_hamiltonian(H: PolynomialHamiltonian, field: Superfield | Multiplet) -> HamiltonianExpansion:
    """Evaluate the polynomial directly on superfield elements and decompose in θ, θ̄.

    The θθ̄ coefficient is compared with ``i ℋ̃`` computed from the derivative
    formula; the comparison is reported, not enforced.
    """
    if isinstance(field, Multiplet):
        field = Superfield(field)
    if field.dim != H.dim:
        raise ValueError(f"superfield has {field.dim} components, Hamiltonian needs {H.dim}")
    full = H.value(list(field.elements))
    scalar, th, thb, tt = _theta_components(full)
    lie = lie_hamiltonian_element(H, field.multiplet)
    target = 1j * lie
    diff = tt.max_abs_diff(target)
    return HamiltonianExpansion(
        full, scalar, th, thb, tt, lie, diff, _relative(diff, max(target.max_abs(), tt.max_abs()))
    )


def nilpotent_remainder(field: Superfield) -> float:
    """Largest coefficient among all cubic products of superfield fluctuations (should be 0)."""
    d = field.dim
    flucts = [field.fluctuation(a) for a in range(d)]
    worst = 0.0
    for a in range(d):
        for b in range(a, d):
            ab = flucts[a] * flucts[b]
            for c in range(b, d):
                worst = max(worst, (ab * flucts[c]).max_abs())
    return worst


@dataclass
class ActionDecomposition:
    """Components of the sliced superspace action and the independent comparison terms."""

    representation: str
    total: GrassmannElement
    slices: list = field(repr=False)
    scalar: GrassmannElement
    theta: GrassmannElement
    thetabar: GrassmannElement
    thetathetabar: GrassmannElement
    lie_action: GrassmannElement
    surface_term: GrassmannElement
    residual: float
    relative_residual: float

    @property
    def classical_action(self) -> complex:
        return self.scalar.scalar_part


def _kinetic_position(fk: Superfield, fk1: Superfield, n: int) -> GrassmannElement:
    out = fk.gens.zero()
    for i in range(n):
        out = out + fk[n + i] * (fk1[i] - fk[i])
    return out


def _kinetic_momentum(fk: Superfield, fk1: Superfield, n: int) -> GrassmannElement:
    out = fk.gens.zero()
    for i in range(n):
        out = out + (-fk[i]) * (fk1[n + i] - fk[n + i])
    return out


def _lie_action_position(H, ms: Sequence[Multiplet], dt: float) -> GrassmannElement:
    # q-sector kinetic terms at the left point, p-sector at the right point;
    # this is the rule induced by slicing p_k (q_{k+1} - q_k).
    n = ms[0].dim // 2
    out = ms[0].gens.zero()
    for k in range(len(ms) - 1):
        m0, m1 = ms[k], ms[k + 1]
        term = ms[0].gens.zero()
        for i in range(n):
            term = term + m0.lam[i] * (m1.phi[i] - m0.phi[i])
            term = term + m1.lam[n + i] * (m1.phi[n + i] - m0.phi[n + i])
            term = term + 1j * (m0.cbar[i] * (m1.c[i] - m0.c[i]))
            term = term + 1j * (m1.cbar[n + i] * (m1.c[n + i] - m0.c[n + i]))
        out = out + (term - dt * lie_hamiltonian_element(H, m0))
    return out


def _lie_action_momentum(H, ms: Sequence[Multiplet], dt: float) -> GrassmannElement:
    # λ_p ṗ − q λ̇_q + i c^q dc̄_q/dt + i c̄_p ċ^p − ℋ̃, all at the left point
    n = ms[0].dim // 2
    out = ms[0].gens.zero()
    for k in range(len(ms) - 1):
        m0, m1 = ms[k], ms[k + 1]
        term = ms[0].gens.zero()
        for i in range(n):
            term = term + m0.lam[n + i] * (m1.phi[n + i] - m0.phi[n + i])
            term = term - m0.phi[i] * (m1.lam[i] - m0.lam[i])
            term = term + 1j * (m0.c[i] * (m1.cbar[i] - m0.cbar[i]))
            term = term + 1j * (m0.cbar[n + i] * (m1.c[n + i] - m0.c[n + i]))
        out = out + (term - dt * lie_hamiltonian_element(H, m0))
    return out


def surface_term(first: Multiplet, last: Multiplet) -> GrassmannElement:
    """``(λ_p p + i c̄_p c^p)`` at the last slice minus at the first."""
    n = first.dim // 2

    def at(m: Multiplet) -> GrassmannElement:
        out = m.gens.zero()
        for i in range(n):
            out = out + m.lam[n + i] * m.phi[n + i] + 1j * (m.cbar[n + i] * m.c[n + i])
        return out

    return at(last) - at(first)


def discretized_superaction(
    H: PolynomialHamiltonian,
    path: Sequence[Union[Multiplet, ExtendedState]],
    dt: float,
    representation: str = "position",
) -> ActionDecomposition:
    """Sliced ``S[Φ]`` in the Grassmann algebra, decomposed in θ, θ̄.

    ``representation="position"`` sums ``Φ^p_k (Φ^q_{k+1} − Φ^q_k) − dt H(Φ_k)``;
    ``"momentum"`` sums ``−Φ^q_k (Φ^p_{k+1} − Φ^p_k) − dt H(Φ_k)``. The θθ̄
    component is compared with ``i (S̃ − s.t.)`` where ``S̃`` comes straight from
    the extended Lagrangian on the same slices (no endpoint term in the momentum
    representation).
    """
    if len(path) < 2:
        raise ValueError(f"a sliced action needs at least 2 states, got {len(path)}")
    if dt < 0:
        raise ValueError(f"time step must be non-negative, got {dt}")
    if representation not in ("position", "momentum"):
        raise ValueError(f"unknown representation {representation!r}")
    gens = path[0].gens if isinstance(path[0], Multiplet) else superspace(len(path[0].phi) // 2)
    ms = [as_multiplet(s, gens) for s in path]
    if any(m.gens is not gens for m in ms):
        raise ValueError("all slices must share one generator set")
    if ms[0].dim != H.dim or any(m.dim != ms[0].dim for m in ms):
        raise ValueError("slice dimensions do not match the Hamiltonian")
    n = H.n
    fields = [Superfield(m) for m in ms]
    kinetic = _kinetic_position if representation == "position" else _kinetic_momentum

    slices = []
    total = gens.zero()
    for k in range(len(fields) - 1):
        sl = kinetic(fields[k], fields[k + 1], n) - H.value(list(fields[k].elements)) * dt
        slices.append(sl)
        total = total + sl

    scalar, th, thb, tt = _theta_components(total)
    if representation == "position":
        lie = _lie_action_position(H, ms, dt)
        st = surface_term(ms[0], ms[-1])
    else:
        lie = _lie_action_momentum(H, ms, dt)
        st = gens.zero()
    target = 1j * (lie - st)
    diff = tt.max_abs_diff(target)
    return ActionDecomposition(
        representation,
        total,
        slices,
        scalar,
        th,
        thb,
        tt,
        lie,
        st,
        diff,
        _relative(diff, max(target.max_abs(), tt.max_abs())),
    )


def berezin_bridge(S_super: GrassmannElement) -> tuple[GrassmannElement, complex]:
    """``(i ∫dθ dθ̄ S[Φ], S[Φ]|_{θ,θ̄→0})``."""
    classical = 1j * berezin(S_super, [THETA, THETABAR])
    quantum = S_super.restrict(TIME_PARTNERS).scalar_part
    return classical, quantum


def freeze(S_super: GrassmannElement, delta: float) -> complex:
    """Exponent of the sliced quantum weight: the θ,θ̄ → 0 restriction divided by Δ."""
    if not delta > 0:
        raise ValueError(f"action scale Δ must be positive, got {delta}")
    return S_super.restrict(TIME_PARTNERS).scalar_part / delta


def classical_action(H: PolynomialHamiltonian, phis, dt: float, representation: str = "position"):
    """Sliced ``Σ_k [p_k (q_{k+1} − q_k) − H(φ_k) dt]`` for one path or a batch.

    ``phis`` has shape ``(K, 2n, ...)``. The accumulation order matches
    :func:`discretized_superaction` so that the two agree bit for bit.
    """
    n = H.n
    acc = None
    for k in range(len(phis) - 1):
        cur, nxt = phis[k], phis[k + 1]
        kin = 0.0
        for i in range(n):
            if representation == "position":
                kin = kin + cur[n + i] * (nxt[i] - cur[i])
            else:
                kin = kin + (-cur[i]) * (nxt[n + i] - cur[n + i])
        sl = kin - H.value(cur) * dt
        acc = sl if acc is None else acc + sl
    return acc
