"""scikit-learn style wrappers around the evolution and propagation routines.

Every transformer takes rows of samples (one state, wave or wavefunction per
row) so they drop into ``sklearn.pipeline.Pipeline``. ``fit`` only validates
parameters and precomputes whatever is independent of the data: the backward
characteristics for KvN transport and the time-slice unitary for the quantum
propagator. The extended flow has no data-independent part.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_complex_rows, check_hamiltonian, check_positive
from .cpi import ExtendedState, extended_flow
from .kvn import KvNWave, PhaseGrid, _backward_points, _pull_back, evolve_kvn
from .propagator import SlicingScheme, momentum_propagator, position_propagator

__all__ = ["ExtendedFlowTransformer", "KvNTransformer", "QuantumPropagator"]


class KvNTransformer(TransformerMixin, BaseEstimator):
    """Evolve flattened KvN waves ``ψ(q, p)`` for a fixed time.

    Each row of ``X`` is a wave of ``n_q * n_p`` complex samples in row-major
    order (``q`` slow, ``p`` fast). After ``transform`` the number of backward
    characteristics that left the grid is in ``support_violations_``.

    Examples
    --------
    >>> from kvnquant.hamiltonian import harmonic
    >>> est = KvNTransformer(harmonic(), time=1.0, n_q=32, n_p=32).fit()
    >>> est.grid_.shape
    (32, 32)
    """

    def __init__(
        self,
        hamiltonian=None,
        time=1.0,
        method="characteristics",
        dt=1e-2,
        q_range=(-6.0, 6.0),
        p_range=(-6.0, 6.0),
        n_q=256,
        n_p=256,
    ):
        self.hamiltonian = hamiltonian
        self.time = time
        self.method = method
        self.dt = dt
        self.q_range = q_range
        self.p_range = p_range
        self.n_q = n_q
        self.n_p = n_p

    def fit(self, X=None, y=None):
        H = check_hamiltonian(self.hamiltonian, n=1)
        check_positive("time", self.time, allow_zero=True)
        check_positive("dt", self.dt)
        if self.method not in ("characteristics", "spectral-split"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "spectral-split" and not H.is_separable():
            raise ValueError("spectral-split needs a separable Hamiltonian")
        self.hamiltonian_ = H
        self.grid_ = PhaseGrid(self.q_range, self.p_range, self.n_q, self.n_p)
        self.points_ = None
        if self.method == "characteristics" and self.time > 0:
            self.points_ = _backward_points(H, self.grid_, float(self.time), float(self.dt))
        if X is not None:
            check_complex_rows(X, self.n_q * self.n_p)
        self.n_features_in_ = self.n_q * self.n_p
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        rows, single = check_complex_rows(X, self.n_features_in_)
        out = np.empty_like(rows)
        violations = []
        for k, row in enumerate(rows):
            values = row.reshape(self.grid_.shape)
            if self.points_ is not None:
                evolved, bad = _pull_back(values, self.grid_, self.points_)
            else:
                wave = evolve_kvn(self.hamiltonian_, KvNWave(self.grid_, values), float(self.time), self.method, float(self.dt))
                evolved, bad = wave.values, wave.support_violations
            out[k] = evolved.reshape(-1)
            violations.append(bad)
        self.support_violations_ = np.array(violations)
        return out[0] if single else out


class ExtendedFlowTransformer(TransformerMixin, BaseEstimator):
    """Map extended states ``(φ, λ, c, c̄)`` forward along the flow of ``ℋ̃``.

    Rows have ``8n`` entries: ``φ`` (real), then ``λ``, ``c`` and ``c̄``.
    """

    def __init__(self, hamiltonian=None, time=1.0, dt=1e-3):
        self.hamiltonian = hamiltonian
        self.time = time
        self.dt = dt

    def fit(self, X=None, y=None):
        H = check_hamiltonian(self.hamiltonian)
        check_positive("time", self.time, allow_zero=True)
        check_positive("dt", self.dt)
        self.hamiltonian_ = H
        self.n_features_in_ = 4 * H.dim
        if X is not None:
            check_complex_rows(X, self.n_features_in_)
        return self

    def transform(self, X):
        check_is_fitted(self, "hamiltonian_")
        rows, single = check_complex_rows(X, self.n_features_in_)
        d = self.hamiltonian_.dim
        if np.any(rows[:, :d].imag != 0):
            raise ValueError("phase-space coordinates must be real")
        out = np.empty_like(rows)
        for k, row in enumerate(rows):
            traj = extended_flow(
                self.hamiltonian_, ExtendedState.from_vector(row), float(self.time), float(self.dt), store_every=10**9
            )
            out[k] = traj.states[-1]
        return out[0] if single else out


class QuantumPropagator(TransformerMixin, BaseEstimator):
    """Time-sliced propagation of sampled wavefunctions.

    ``fit`` builds the slice unitary on the configured grid. ``transform``
    applies it to rows of amplitudes normalised with ``Σ|ψ|² dx = 1``
    (position) or ``Σ|ψ|² dp = 1`` (momentum).
    """

    def __init__(
        self,
        hamiltonian=None,
        time=1.0,
        n_slices=256,
        x_range=(-20.0, 20.0),
        n_points=1024,
        delta=1.0,
        representation="position",
    ):
        self.hamiltonian = hamiltonian
        self.time = time
        self.n_slices = n_slices
        self.x_range = x_range
        self.n_points = n_points
        self.delta = delta
        self.representation = representation

    def fit(self, X=None, y=None):
        H = check_hamiltonian(self.hamiltonian, n=1)
        check_positive("time", self.time, allow_zero=True)
        check_positive("delta", self.delta)
        builders = {"position": position_propagator, "momentum": momentum_propagator}
        if self.representation not in builders:
            raise ValueError(f"representation must be 'position' or 'momentum', got {self.representation!r}")
        scheme = SlicingScheme(float(self.time), int(self.n_slices), tuple(self.x_range), int(self.n_points))
        self.hamiltonian_ = H
        self.propagator_ = builders[self.representation](H, scheme, float(self.delta))
        self.n_features_in_ = int(self.n_points)
        if X is not None:
            check_complex_rows(X, self.n_features_in_)
        return self

    @property
    def kernel_(self) -> np.ndarray:
        check_is_fitted(self, "propagator_")
        return self.propagator_.kernel

    def transform(self, X):
        check_is_fitted(self, "propagator_")
        rows, single = check_complex_rows(X, self.n_features_in_)
        out = rows @ self.propagator_.unitary.T
        return out[0] if single else out
