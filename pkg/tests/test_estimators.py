import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from kvnquant import ExtendedFlowTransformer, KvNTransformer, QuantumPropagator
from kvnquant.cpi import ExtendedState, extended_flow
from kvnquant.hamiltonian import PolynomialHamiltonian, harmonic, quartic
from kvnquant.kvn import PhaseGrid, _gaussian_wave, evolve_kvn


def test_params_roundtrip_and_clone():
    est = KvNTransformer(harmonic(), time=0.5, n_q=32, n_p=32)
    params = est.get_params()
    assert params["time"] == 0.5 and params["n_q"] == 32
    twin = clone(est).set_params(time=0.25)
    assert twin.time == 0.25 and est.time == 0.5
    assert not hasattr(twin, "grid_")


def test_kvn_transformer_matches_function():
    grid = PhaseGrid.square(6, 32)
    psi0 = _gaussian_wave(grid, (1.0, 0.0))
    est = KvNTransformer(quartic(), time=0.7, n_q=32, n_p=32).fit()
    out = est.transform(psi0.values.reshape(-1))
    ref = evolve_kvn(quartic(), psi0, 0.7)
    assert np.array_equal(out.reshape(32, 32), ref.values)
    batch = est.transform(np.stack([psi0.values.reshape(-1)] * 2))
    assert batch.shape == (2, 1024) and est.support_violations_.shape == (2,)


def test_spectral_split_method_in_pipeline():
    grid = PhaseGrid.square(6, 32)
    psi0 = _gaussian_wave(grid, (1.0, 0.0)).values.reshape(1, -1)
    pipe = Pipeline(
        [
            ("a", KvNTransformer(harmonic(), time=0.3, method="spectral-split", n_q=32, n_p=32)),
            ("b", KvNTransformer(harmonic(), time=0.3, method="spectral-split", n_q=32, n_p=32)),
        ]
    )
    two = pipe.fit_transform(psi0)
    one = KvNTransformer(harmonic(), time=0.6, method="spectral-split", n_q=32, n_p=32).fit_transform(psi0)
    assert np.max(np.abs(two - one)) <= 1e-10


def test_extended_flow_transformer():
    s0 = ExtendedState([1.0, 0.0], [0.2, 0.1], [1.0, 0.0], [0.0, 1.0])
    est = ExtendedFlowTransformer(harmonic(), time=0.5, dt=1e-2).fit()
    out = est.transform(s0.to_vector())
    ref = extended_flow(harmonic(), s0, 0.5, 1e-2).final.to_vector()
    assert np.allclose(out, ref, atol=1e-14)
    bad = s0.to_vector().astype(complex)
    bad[0] = 1j
    with pytest.raises(ValueError, match="real"):
        est.transform(bad)


def test_quantum_propagator_is_unitary_map():
    est = QuantumPropagator(harmonic(), time=0.4, n_slices=16, x_range=(-10, 10), n_points=128).fit()
    x = est.propagator_.grid
    dx = x[1] - x[0]
    psi = np.exp(-((x - 1) ** 2) / 2)
    psi = psi / np.sqrt(np.sum(psi**2) * dx)
    out = est.transform(psi)
    assert out.shape == (128,)
    assert abs(np.sum(np.abs(out) ** 2) * dx - 1) <= 1e-10
    assert est.kernel_.shape == (128, 128)


def test_hamiltonian_pairs_accepted():
    est = QuantumPropagator([[[0, 2], 0.5], [[2, 0], 0.5]], n_points=64, n_slices=4, x_range=(-8, 8)).fit()
    assert est.hamiltonian_ == harmonic()


@pytest.mark.parametrize(
    "est, err",
    [
        (KvNTransformer(None), ValueError),
        (KvNTransformer(harmonic(), time=-1.0), ValueError),
        (KvNTransformer(harmonic(), dt="fast"), TypeError),
        (KvNTransformer(harmonic(), method="euler"), ValueError),
        (KvNTransformer(PolynomialHamiltonian(1, {(1, 1): 1.0}), method="spectral-split"), ValueError),
        (QuantumPropagator(harmonic(), representation="energy"), ValueError),
        (QuantumPropagator(harmonic(), delta=0.0), ValueError),
        (ExtendedFlowTransformer(harmonic(), dt=0.0), ValueError),
    ],
)
def test_invalid_parameters(est, err):
    with pytest.raises(err):
        est.fit()


def test_transform_input_checks():
    est = KvNTransformer(harmonic(), n_q=16, n_p=16)
    with pytest.raises(NotFittedError):
        est.transform(np.zeros(256))
    est.fit()
    with pytest.raises(ValueError, match="features"):
        est.transform(np.zeros(100))
    with pytest.raises(ValueError, match="NaN"):
        est.transform(np.full(256, np.nan))
    with pytest.raises(ValueError):
        est.transform(np.zeros((2, 2, 64)))
