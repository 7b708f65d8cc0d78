"""Brute-force lattice path sums for the frozen superspace action.

On a periodic lattice of ``M`` positions with its ``M`` conjugate momenta, the
sliced quantum weight of a phase-space path is ``exp(i S[φ] / Δ) / M^N`` with
``S[φ] = Σ_k p_k (q_{k+1} − q_k) − H(q_k, p_k) dt``. Summing it over every
intermediate position and every slice momentum must reproduce the product of
single-slice transfer matrices, which for ``H = T(p) + V(q)`` is the Lie-ordered
split-operator kernel ``(F† e^{-iT dt/Δ} F e^{-iV dt/Δ})^N``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .cpi import ExtendedState
from .hamiltonian import PolynomialHamiltonian
from .propagator import fourier_matrix, momentum_grid, phase_tables
from .superfield import classical_action, discretized_superaction, freeze

__all__ = [
    "BridgeReport",
    "bridge_demonstration",
    "delta_scaling_check",
    "lattice_transfer_matrix",
    "split_operator_kernel",
]

MAX_PATHS = 10**6


@dataclass
class BridgeReport:
    n_points: int
    n_slices: int
    delta: float
    time: float
    entries: list
    n_paths: int
    path_sum: np.ndarray
    transfer_kernel: np.ndarray
    split_kernel: np.ndarray | None
    relative_error: float
    transfer_vs_split: float | None
    superfield_checked: int
    superfield_identical: bool
    mismatches: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "n_points": self.n_points,
            "n_slices": self.n_slices,
            "delta": self.delta,
            "time": self.time,
            "n_entries": len(self.entries),
            "n_paths": self.n_paths,
            "relative_error": self.relative_error,
            "transfer_vs_split": self.transfer_vs_split,
            "superfield_checked": self.superfield_checked,
            "superfield_identical": self.superfield_identical,
        }


def _lattice(n_points, x_range, delta):
    lo, hi = x_range
    dx = (hi - lo) / n_points
    x = lo + dx * np.arange(n_points)
    return x, momentum_grid(n_points, dx, delta)


def lattice_transfer_matrix(H: PolynomialHamiltonian, x, p, dt: float, delta: float) -> np.ndarray:
    """``T[j, k] = (1/M) Σ_l exp(i [p_l (x_j − x_k) − H(x_k, p_l) dt] / Δ)`` by direct summation."""
    M = len(x)
    out = np.zeros((M, M), dtype=complex)
    for l, pl in enumerate(p):
        h = H.value(np.array([x, np.full_like(x, pl)]))
        out += np.exp(1j * (pl * (x[:, None] - x[None, :]) - h[None, :] * dt) / delta)
    return out / M


def split_operator_kernel(H: PolynomialHamiltonian, x, p, dt: float, n_slices: int, delta: float) -> np.ndarray:
    """Unitary of ``n_slices`` Lie-ordered slices (potential first), built column by column."""
    kinetic, potential = H.split()
    zx, zp = np.zeros_like(x), np.zeros_like(p)
    v = np.exp(-1j * potential.value(np.array([x, zx])) * dt / delta)
    t = np.exp(-1j * kinetic.value(np.array([zp, p])) * dt / delta)
    F = fourier_matrix(x, p, delta)
    U = np.eye(len(x), dtype=complex)
    for _ in range(n_slices):
        U = F.conj().T @ (t[:, None] * (F @ (v[:, None] * U)))
    return U


def _path_phases(H, x, p, jf, ji, dt, n_slices, delta):
    """Accumulated actions of all lattice paths from ``x[ji]`` to ``x[jf]``.

    Axes: intermediate positions ``q_1..q_{N-1}`` then momenta ``p_0..p_{N-1}``.
    """
    M = len(x)
    N = n_slices
    n_axes = 2 * N - 1
    shape = (M,) * n_axes

    def axis_values(values, axis):
        s = [1] * n_axes
        s[axis] = M
        return np.broadcast_to(values.reshape(s), shape)

    qs = [np.full(shape, x[ji])]
    qs += [axis_values(x, k) for k in range(N - 1)]
    qs += [np.full(shape, x[jf])]
    ps = [axis_values(p, N - 1 + k) for k in range(N)] + [np.zeros(shape)]
    phis = [np.array([qs[k], ps[k]]) for k in range(N + 1)]
    return classical_action(H, phis, dt), phis


def bridge_demonstration(
    H: PolynomialHamiltonian,
    n_points: int = 7,
    n_slices: int = 3,
    time: float = 1.0,
    x_range: tuple[float, float] = (-3.0, 3.0),
    delta: float = 1.0,
    entries=None,
    superfield_samples: int = 64,
    seed: int = 0,
) -> BridgeReport:
    """Sum ``exp(i S / Δ)`` over all lattice paths and compare with transfer matrices.

    ``entries`` lists ``(final index, initial index)`` kernel entries; by default
    the whole kernel when it fits the path budget, else the column of the middle
    initial point. A random sample of paths is also pushed through the superspace
    action to confirm that its θ,θ̄ → 0 restriction is the very same number.
    """
    if n_points > 9 or n_slices > 4:
        raise ValueError("bridge lattices are limited to 9 points and 4 slices")
    if n_slices < 1:
        raise ValueError("need at least one slice")
    if not delta > 0:
        raise ValueError(f"action scale Δ must be positive, got {delta}")
    x, p = _lattice(n_points, x_range, delta)
    dt = time / n_slices
    per_entry = n_points ** (2 * n_slices - 1)
    if entries is None:
        everything = list(itertools.product(range(n_points), repeat=2))
        if per_entry * len(everything) <= MAX_PATHS:
            entries = everything
        else:
            entries = [(jf, n_points // 2) for jf in range(n_points)]
    entries = [tuple(e) for e in entries]
    n_paths = per_entry * len(entries)
    if n_paths > MAX_PATHS:
        raise ValueError(f"{n_paths} lattice paths requested, limit is {MAX_PATHS}")

    rng = np.random.default_rng(seed)
    path_sum = np.zeros((n_points, n_points), dtype=complex)
    norm = float(n_points) ** n_slices
    checked = 0
    mismatches = []
    for jf, ji in entries:
        acc, phis = _path_phases(H, x, p, jf, ji, dt, n_slices, delta)
        phase = acc / delta
        path_sum[jf, ji] = np.exp(1j * phase).sum() / norm
        flat = [ph.reshape(2, -1) for ph in phis]
        picks = rng.choice(flat[0].shape[1], size=min(superfield_samples, flat[0].shape[1]), replace=False)
        for idx in picks:
            states = [ExtendedState.zeros(f[:, idx]) for f in flat]
            dec = discretized_superaction(H, states, dt)
            frozen = freeze(dec.total, delta)
            ref = phase.reshape(-1)[idx]
            checked += 1
            if frozen.imag != 0.0 or frozen.real != ref or dec.classical_action.real != acc.reshape(-1)[idx]:
                mismatches.append((jf, ji, int(idx), frozen, ref))

    T1 = lattice_transfer_matrix(H, x, p, dt, delta)
    transfer = np.linalg.matrix_power(T1, n_slices)
    split = None
    t_vs_s = None
    if H.is_separable():
        split = split_operator_kernel(H, x, p, dt, n_slices, delta)
        t_vs_s = float(np.max(np.abs(transfer - split)) / np.max(np.abs(split)))
    ref = split if split is not None else transfer
    rows, cols = zip(*entries)
    rel = float(
        np.max(np.abs(path_sum[rows, cols] - ref[rows, cols])) / np.max(np.abs(ref[rows, cols]))
    )
    return BridgeReport(
        n_points,
        n_slices,
        delta,
        time,
        entries,
        n_paths,
        path_sum,
        transfer,
        split,
        rel,
        t_vs_s,
        checked,
        not mismatches,
        mismatches,
    )


def _same_bits(a, b) -> bool:
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    return a.shape == b.shape and bool(np.all(a.view(np.uint64) == b.view(np.uint64)))


def delta_scaling_check(
    H: PolynomialHamiltonian,
    n_points: int = 5,
    n_slices: int = 3,
    time: float = 1.0,
    x_range: tuple[float, float] = (-3.0, 3.0),
    delta: float = 1.0,
    superfield_samples: int = 16,
    seed: int = 0,
) -> dict:
    """Check that ``S / (2Δ)`` is exactly half of ``S / Δ`` for every sliced phase.

    Covers the lattice path accumulators, the per-slice split-operator phase
    tables (on one fixed momentum array) and the superspace ``freeze``.
    """
    if not delta > 0:
        raise ValueError(f"action scale Δ must be positive, got {delta}")
    x, p = _lattice(n_points, x_range, delta)
    dt = time / n_slices
    mid = n_points // 2
    acc, phis = _path_phases(H, x, p, mid, mid, dt, n_slices, delta)
    path_ok = _same_bits(acc / (2 * delta), (acc / delta) / 2)
    n_phases = acc.size
    tables_ok = None
    if H.n == 1 and H.is_separable():
        v1, t1 = phase_tables(H, x, p, dt, delta)
        v2, t2 = phase_tables(H, x, p, dt, 2 * delta)
        tables_ok = _same_bits(v2, v1 / 2) and _same_bits(t2, t1 / 2)
        n_phases += v1.size + t1.size
    rng = np.random.default_rng(seed)
    flat = [ph.reshape(2, -1) for ph in phis]
    picks = rng.choice(flat[0].shape[1], size=min(superfield_samples, flat[0].shape[1]), replace=False)
    frozen_ok = True
    for idx in picks:
        total = discretized_superaction(H, [ExtendedState.zeros(f[:, idx]) for f in flat], dt).total
        one, two = freeze(total, delta), freeze(total, 2 * delta)
        frozen_ok &= _same_bits([two.real, two.imag], [one.real / 2, one.imag / 2])
    identical = path_ok and frozen_ok and tables_ok is not False
    return {
        "delta": delta,
        "n_phases": int(n_phases + len(picks)),
        "paths_identical": path_ok,
        "tables_identical": tables_ok,
        "superfield_identical": bool(frozen_ok),
        "identical": bool(identical),
    }
