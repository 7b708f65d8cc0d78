"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

import numbers

import numpy as np

from .hamiltonian import PolynomialHamiltonian


def check_hamiltonian(H, n: int | None = None) -> PolynomialHamiltonian:
    """Accept a :class:`PolynomialHamiltonian` or a list of ``(exponents, coeff)`` pairs."""
    if H is None:
        raise ValueError("a Hamiltonian is required")
    if not isinstance(H, PolynomialHamiltonian):
        H = PolynomialHamiltonian.from_pairs(H)
    if n is not None and H.n != n:
        raise ValueError(f"expected a Hamiltonian with n={n}, got n={H.n}")
    return H


def check_positive(name: str, value, allow_zero: bool = False) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    if not np.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValueError(f"{name} must be {bound}, got {value}")
    return float(value)


def check_complex_rows(X, n_features: int, name: str = "X") -> tuple[np.ndarray, bool]:
    """Coerce to a complex 2-D array of rows; returns ``(array, was_1d)``.

    ``sklearn.utils.check_array`` rejects complex input, hence this helper.
    """
    arr = np.asarray(X)
    if arr.dtype == object:
        raise TypeError(f"{name} must be numeric")
    arr = arr.astype(complex)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[1] != n_features:
        raise ValueError(f"{name} has {arr.shape[1]} features, expected {n_features}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinity")
    return arr, single
