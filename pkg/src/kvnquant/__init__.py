"""Superspace path integrals for classical and quantum mechanics.

The package is organised bottom-up: ``grassmann`` (the algebra),
``hamiltonian`` (polynomial models and their flows), ``superfield`` (the
superspace expansion of H and of the sliced action), ``cpi`` (the extended
flow and its charges), ``kvn`` (phase-space waves), ``propagator`` (sliced
quantum kernels) and ``bridge`` (brute-force lattice path sums). ``cli`` and
``estimators`` sit on top.
"""

from .estimators import ExtendedFlowTransformer, KvNTransformer, QuantumPropagator
from .grassmann import GeneratorSet, GrassmannElement, GrassmannError, berezin
from .hamiltonian import PolynomialHamiltonian, free_particle, harmonic, quartic

__version__ = "0.1.0"

__all__ = [
    "ExtendedFlowTransformer",
    "GeneratorSet",
    "GrassmannElement",
    "GrassmannError",
    "KvNTransformer",
    "PolynomialHamiltonian",
    "QuantumPropagator",
    "berezin",
    "free_particle",
    "harmonic",
    "quartic",
]
