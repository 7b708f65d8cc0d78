"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured value and
its limit; the lines are collected again at the end of the pytest run.
"""

import time

import numpy as np

from kvnquant.bridge import bridge_demonstration, delta_scaling_check
from kvnquant.cpi import extended_flow
from kvnquant.hamiltonian import free_particle, harmonic, quartic
from kvnquant.propagator import (
    SlicingScheme,
    fourier_duality_check,
    momentum_propagator,
    oracle_error,
    position_propagator,
    trotter_table,
)
from kvnquant.scenarios import (
    random_extended_state,
    run_action_instance,
    run_charge_scenario,
    run_hamiltonian_instance,
    run_kvn_scenario,
    run_tangent_scenario,
)

SEED = 20240611
PRESETS = {"harmonic": harmonic(), "free": free_particle(), "quartic": quartic()}


def _fmt(x):
    return f"{x:.3e}"


def test_superfield_hamiltonian_identity(verdict):
    seqs = np.random.SeedSequence(SEED).spawn(100)
    start = time.perf_counter()
    worst = max(run_hamiltonian_instance(s, max_n=2, max_degree=6)["relative_residual"] for s in seqs)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed <= 5.0
    assert verdict("superfield_hamiltonian_identity", f"residual {_fmt(worst)} in {elapsed:.2f} s", "1e-12, 5 s", ok)


def test_action_multiplet_identity(verdict):
    seqs = np.random.SeedSequence(SEED + 1).spawn(100)
    start = time.perf_counter()
    rows = [run_action_instance(s, slice_range=(3, 20)) for s in seqs]
    elapsed = time.perf_counter() - start
    worst = max(r["relative_residual"] for r in rows)
    exact = sum(r["restriction_exact"] for r in rows)
    ok = worst <= 1e-12 and exact == 100 and elapsed <= 10.0
    value = f"residual {_fmt(worst)}, exact restriction {exact}/100 in {elapsed:.2f} s"
    assert verdict("action_multiplet_identity", value, "1e-12, 100/100, 10 s", ok)


def test_tangent_map(verdict):
    rng = np.random.default_rng(SEED + 2)
    ghost0 = rng.normal(size=2)
    ghost_worst = jac_worst = 0.0
    for H in PRESETS.values():
        r = run_tangent_scenario(H, [1.0, 0.5], 10.0, 1e-3, ghost0)
        ghost_worst = max(ghost_worst, r["ghost_error"])
        jac_worst = max(jac_worst, r["jacobian_error"])
    ok = ghost_worst <= 1e-6 and jac_worst <= 1e-5
    value = f"ghost {_fmt(ghost_worst)}, finite difference {_fmt(jac_worst)}"
    assert verdict("tangent_map", value, "1e-6, 1e-5", ok)


def _state_errors(H, state, T, h):
    ref = extended_flow(H, state, T, h / 16, store_every=10**9).states[-1]
    return [float(np.max(np.abs(extended_flow(H, state, T, s, store_every=10**9).states[-1] - ref))) for s in (h, h / 2)]


def test_conservation_suite(verdict):
    rng = np.random.default_rng(SEED + 3)
    state = random_extended_state(rng, 2)
    state = type(state)([1.0, 0.5], state.lam, state.c, state.cbar)
    quad = 0.0
    for name in ("harmonic", "free"):
        _, drift = run_charge_scenario(PRESETS[name], state, 10.0, 1e-3, store_every=10)
        quad = max(quad, *(drift[k] for k in ("lie_hamiltonian", "ghost_pairing", "Q", "Qbar")))
    H = quartic()
    _, drift = run_charge_scenario(H, state, 10.0, 1e-3, store_every=10)
    quartic_drift = drift["lie_hamiltonian"]
    # ℋ̃ drift ratio for the quartic case, plus the global state-error ratio
    drifts = [run_charge_scenario(H, state, 5.0, h)[1]["lie_hamiltonian"] for h in (0.0125, 0.00625)]
    ratios = [drifts[0] / drifts[1]]
    for name in ("harmonic", "quartic"):
        errs = _state_errors(PRESETS[name], state, 5.0, 0.0125)
        ratios.append(errs[0] / errs[1])
    # RK4 integrates the free flow exactly (solutions are linear in t), so
    # only roundoff is left there and no ratio is defined
    free_err = max(_state_errors(free_particle(), state, 5.0, 0.0125))
    ok = quad <= 1e-8 and quartic_drift <= 1e-6 and all(12 <= r <= 20 for r in ratios) and free_err <= 1e-10
    value = (
        f"quadratic {_fmt(quad)}, quartic {_fmt(quartic_drift)}, "
        f"ratios {[round(float(r), 2) for r in ratios]}, free step error {_fmt(free_err)}"
    )
    assert verdict("conservation_suite", value, "1e-8, 1e-6, [12, 20], free exact to 1e-10", ok)


def test_kvn_compatibility(verdict):
    r = run_kvn_scenario(harmonic(), (1.0, 0.0), 1.0, n_points=256)
    ok = r["l1_distance"] <= 1e-6 and r["norm_drift"] <= 1e-6
    value = f"L1 {_fmt(r['l1_distance'])}, norm drift {_fmt(r['norm_drift'])}"
    assert verdict("kvn_compatibility", value, "1e-6, 1e-6", ok)


def test_classical_kernel_tracking(verdict):
    r = run_kvn_scenario(harmonic(), (1.0, 0.0), np.pi / 2, n_points=256, width=0.25)
    err = r["center_error_cells"]
    assert verdict("classical_kernel_center", f"{_fmt(err)} cells", "1 cell", err <= 1.0)


def test_quantum_oracles(verdict):
    scheme = SlicingScheme(np.pi / 4, 256, (-20.0, 20.0), 1024)
    free = oracle_error(position_propagator(free_particle(), scheme), free_particle())
    mehler = oracle_error(position_propagator(harmonic(), scheme), harmonic())
    ratios = [r for _, _, r in trotter_table(harmonic(), np.pi / 4)[1:]]
    ok = free <= 1e-6 and mehler <= 1e-5 and all(3.5 <= r <= 4.5 for r in ratios)
    value = f"free {_fmt(free)}, Mehler {_fmt(mehler)}, Trotter ratios {[round(r, 3) for r in ratios]}"
    assert verdict("quantum_oracles", value, "1e-6, 1e-5, [3.5, 4.5]", ok)


def test_representation_duality(verdict):
    scheme = SlicingScheme(np.pi / 4, 256, (-20.0, 20.0), 1024)
    res = {
        name: fourier_duality_check(position_propagator(H, scheme), momentum_propagator(H, scheme))
        for name, H in (("free", free_particle()), ("harmonic", harmonic()))
    }
    worst = max(res.values())
    value = ", ".join(f"{k} {_fmt(v)}" for k, v in res.items())
    assert verdict("representation_duality", value, "1e-4", worst <= 1e-4)


def test_bridge_brute_force(verdict):
    cases = [(free_particle(), 7, 3), (harmonic(), 5, 4), (harmonic(), 9, 3), (quartic(), 7, 3)]
    worst, identical, checked, paths = 0.0, True, 0, 0
    for H, n_points, n_slices in cases:
        rep = bridge_demonstration(H, n_points=n_points, n_slices=n_slices, superfield_samples=16, seed=SEED)
        assert rep.n_paths <= 10**6
        worst = max(worst, rep.relative_error)
        identical &= rep.superfield_identical
        checked += rep.superfield_checked
        paths += rep.n_paths
    ok = worst <= 1e-10 and identical
    value = f"relative {_fmt(worst)} over {paths} paths, {checked} restrictions byte-identical={identical}"
    assert verdict("bridge_brute_force", value, "1e-10, identical", ok)


def test_delta_scaling(verdict):
    total, ok = 0, True
    for H in PRESETS.values():
        for delta in (1.0, 0.3, 1.7, 2.0**-5):
            out = delta_scaling_check(H, n_points=7, n_slices=3, delta=delta, seed=SEED)
            ok &= out["identical"]
            total += out["n_phases"]
    assert verdict("delta_scaling", f"{total} phases bitwise halved={ok}", "bitwise", ok)
