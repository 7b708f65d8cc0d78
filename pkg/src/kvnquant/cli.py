"""Command-line batch driver.

Usage::

    kvnquant <command> [--config PATH] [--out DIR] [--seed U64] [--threads N]

Commands: check-superfield, evolve, propagate, simulate-cpi, duality, bridge.

Exit status is 0 when every tolerance gate passes, 1 when a gate fails and 2
for configuration errors (including Hamiltonians a command cannot handle).
Each run writes ``<command>_summary.json`` plus command specific CSV files and
grid dumps into the output directory. Every file records the config hash and
the seed, and nothing in it depends on wall-clock time or thread count.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .bridge import bridge_demonstration, delta_scaling_check
from .config import ConfigError, RunConfig, check_seed, load_config
from .cpi import ExtendedState, extended_flow
from .gridio import encode_grid, grid_csv
from .propagator import (
    SlicingScheme,
    _closed_form_parameters,
    fourier_duality_check,
    momentum_propagator,
    oracle_error,
    position_propagator,
    trotter_table,
    unitarity_error,
)
from .scenarios import (
    run_action_instance,
    run_charge_scenario,
    run_hamiltonian_instance,
    run_kvn_scenario,
    run_tangent_scenario,
)

log = logging.getLogger("kvnquant")

EXIT_OK, EXIT_GATE, EXIT_CONFIG = 0, 1, 2


class Run:
    """Collects gates, warnings and output files for one command."""

    def __init__(self, command: str, cfg: RunConfig):
        self.command = command
        self.cfg = cfg
        self.gates: dict[str, dict] = {}
        self.warnings: list[str] = []
        self.results: dict = {}
        self.files: dict[str, bytes] = {}

    def gate(self, name: str, value, limit, passed: bool):
        self.gates[name] = {"value": value, "limit": limit, "passed": bool(passed)}

    def warn(self, message: str):
        self.warnings.append(message)
        log.warning(message)

    @property
    def header(self) -> str:
        return f"config_hash: {self.cfg.config_hash}\nseed: {self.cfg.seed}"

    def add_csv(self, name: str, text: str):
        self.files[name] = text.encode("utf-8")

    @property
    def passed(self) -> bool:
        return all(g["passed"] for g in self.gates.values())

    def summary(self) -> dict:
        return {
            "command": self.command,
            "config_hash": self.cfg.config_hash,
            "seed": self.cfg.seed,
            "config": self.cfg.canonical(),
            "gates": self.gates,
            "passed": self.passed,
            "results": self.results,
            "warnings": self.warnings,
        }


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _csv(header: str, columns: list[str], rows) -> str:
    lines = [f"# {h}" for h in header.splitlines()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _pool_map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _seeded_ghosts(seed: int, dim: int) -> ExtendedState:
    """Random ``λ, c, c̄`` from the run seed (``φ`` is filled in by the caller)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))
    return ExtendedState(
        np.zeros(dim),
        rng.normal(size=dim) + 1j * rng.normal(size=dim),
        rng.normal(size=dim),
        rng.normal(size=dim),
    )


# ---------------------------------------------------------------- commands


def cmd_check_superfield(run: Run):
    sec = run.cfg.section("check_superfield")
    R = sec["instances"]
    if R < 0:
        raise ConfigError(f"check_superfield.instances: must be >= 0, got {R}")
    if not 1 <= sec["max_n"] <= 3:
        raise ConfigError("check_superfield.max_n: must be 1, 2 or 3")
    if sec["max_degree"] < 1:
        raise ConfigError("check_superfield.max_degree: must be >= 1")
    lo, hi = sec["min_slices"], sec["max_slices"]
    if not 1 <= lo <= hi:
        raise ConfigError("check_superfield.min_slices: need 1 <= min_slices <= max_slices")
    tol = sec["tolerance"]
    if R == 0:
        run.warn("no instances: check_superfield.instances = 0, nothing to check")
        run.results = {"instances": 0}
        return
    children = np.random.SeedSequence(run.cfg.seed).spawn(R)

    def one(seq):
        h_seq, a_seq = seq.spawn(2)
        return (
            run_hamiltonian_instance(h_seq, sec["max_n"], sec["max_degree"]),
            run_action_instance(a_seq, sec["max_n"], sec["max_degree"], (lo, hi)),
        )

    pairs = _pool_map(one, children, run.cfg.threads)
    rows = []
    for k, (h, a) in enumerate(pairs):
        rows.append(
            [k, h["n"], h["degree"], h["relative_residual"], a["n"], a["degree"], a["n_slices"],
             a["representation"], a["relative_residual"], int(a["restriction_exact"])]
        )
    run.add_csv(
        "superfield_residuals.csv",
        _csv(
            run.header,
            ["instance", "h_n", "h_degree", "hamiltonian_residual", "path_n", "path_degree", "n_slices",
             "representation", "action_residual", "restriction_exact"],
            rows,
        ),
    )
    h_max = max(h["relative_residual"] for h, _ in pairs)
    a_max = max(a["relative_residual"] for _, a in pairs)
    exact = sum(a["restriction_exact"] for _, a in pairs)
    run.gate("hamiltonian_residual", h_max, tol, h_max <= tol)
    run.gate("action_residual", a_max, tol, a_max <= tol)
    run.gate("restriction_exact", exact, R, exact == R)
    run.results = {"instances": R, "max_residual": max(h_max, a_max)}


def _wave_meta(run: Run, kind: str) -> dict:
    return {"config_hash": run.cfg.config_hash, "seed": run.cfg.seed, "kind": kind, "axes": ["q", "p"]}


def cmd_evolve(run: Run):
    sec = run.cfg.section("evolve")
    H = run.cfg.hamiltonian
    if H.n != 1:
        raise ConfigError("hamiltonian: KvN grids need one degree of freedom (n = 1)")
    if sec["time"] < 0:
        raise ConfigError(f"evolve.time: must be >= 0, got {sec['time']}")
    if len(sec["center"]) != 2:
        raise ConfigError("evolve.center: expected [q, p]")
    if sec["grid_points"] < 16:
        raise ConfigError("evolve.grid_points: need at least 16")
    for key in ("dt", "grid_half_width", "width", "charge_dt"):
        if not sec[key] > 0:
            raise ConfigError(f"evolve.{key}: must be > 0")
    T = sec["time"]
    r = run_kvn_scenario(H, sec["center"], T, sec["dt"], sec["grid_half_width"], sec["grid_points"], sec["width"])
    grid = r["grid"]
    ranges = (grid.q_range, grid.p_range)
    meta = _wave_meta(run, "kvn-wave")
    run.files["initial_wave.kvg"] = encode_grid(r["psi0"].values, ranges, meta)
    run.files["final_wave.kvg"] = encode_grid(r["psi"].values, ranges, meta)
    run.files["final_density.kvg"] = encode_grid(r["rho"], ranges, _wave_meta(run, "density"))
    if sec["write_csv"]:
        run.add_csv("final_wave.csv", grid_csv(grid.q, grid.p, r["psi"].values, run.header))
    if r["support_violations"]:
        run.warn(f"{r['support_violations']} backward characteristics left the grid (set to zero)")
    cell = max(grid.dq, grid.dp)
    m0, mT, exp = r["psi0"].mean(), r["mean"], r["expected_center"]
    run.add_csv(
        "evolve_summary.csv",
        _csv(
            run.header,
            ["t", "mean_q", "mean_p", "expected_q", "expected_p", "center_error_cells", "norm", "l1_density"],
            [
                [0.0, m0[0], m0[1], float(sec["center"][0]), float(sec["center"][1]),
                 float(np.max(np.abs(m0 - np.asarray(sec["center"], float))) / cell), r["psi0"].norm, 0.0],
                [float(T), mT[0], mT[1], exp[0], exp[1], r["center_error_cells"], r["psi"].norm, r["l1_distance"]],
            ],
        ),
    )
    if H.degree <= 2:
        run.gate("center_error_cells", r["center_error_cells"], sec["center_tolerance"],
                 r["center_error_cells"] <= sec["center_tolerance"])
    run.gate("density_l1", r["l1_distance"], sec["density_tolerance"], r["l1_distance"] <= sec["density_tolerance"])
    run.gate("norm_drift", r["norm_drift"], sec["norm_tolerance"], r["norm_drift"] <= sec["norm_tolerance"])

    state = _seeded_ghosts(run.cfg.seed, H.dim)
    state = ExtendedState(np.asarray(sec["center"], float), state.lam, state.c, state.cbar)
    charges, drift = run_charge_scenario(H, state, sec["charge_time"], sec["charge_dt"], max(1, sec["charge_store_every"]))
    run.add_csv("charges.csv", charges.to_csv(run.header))
    run.gate("lie_hamiltonian_drift", drift["lie_hamiltonian"], sec["drift_tolerance"],
             drift["lie_hamiltonian"] <= sec["drift_tolerance"])
    run.results = {
        "time": T,
        "grid_points": sec["grid_points"],
        "mean_final": list(mT),
        "expected_center": list(exp),
        "center_error_cells": r["center_error_cells"],
        "l1_distance": r["l1_distance"],
        "norm_drift": r["norm_drift"],
        "support_violations": r["support_violations"],
        "charge_drift": drift,
    }


def cmd_simulate_cpi(run: Run):
    sec = run.cfg.section("simulate_cpi")
    H = run.cfg.hamiltonian
    phi = np.asarray(sec["phi"], dtype=float)
    if phi.shape != (H.dim,):
        raise ConfigError(f"simulate_cpi.phi: expected {H.dim} coordinates for n = {H.n}, got {len(phi)}")
    for key in ("time", "dt", "ratio_dt"):
        if not sec[key] > 0:
            raise ConfigError(f"simulate_cpi.{key}: must be > 0")
    lo, hi = sec["ratio_range"]
    T, dt = sec["time"], sec["dt"]
    ghosts = _seeded_ghosts(run.cfg.seed, H.dim)
    state = ExtendedState(phi, ghosts.lam, ghosts.c, ghosts.cbar)
    quadratic = H.degree <= 2

    def charges_job(_):
        return run_charge_scenario(H, state, T, dt, max(1, sec["store_every"]))

    def tangent_job(_):
        return run_tangent_scenario(H, phi, T, dt, ghosts.c.real)

    def ratio_job(_):
        h = sec["ratio_dt"]
        ref = extended_flow(H, state, T, h / 16, store_every=10**9).states[-1]
        errs, drifts = [], []
        for step in (h, h / 2):
            traj = extended_flow(H, state, T, step, store_every=1)
            errs.append(float(np.max(np.abs(traj.states[-1] - ref))))
            drifts.append(run_charge_scenario(H, state, T, step)[1]["lie_hamiltonian"])
        return errs, drifts

    (charges, drift), tangent, (errs, drifts) = _pool_map(
        lambda job: job(None), [charges_job, tangent_job, ratio_job], run.cfg.threads
    )
    run.add_csv("charges.csv", charges.to_csv(run.header))
    tol = sec["quadratic_tolerance"] if quadratic else sec["drift_tolerance"]
    gated = ("lie_hamiltonian", "ghost_pairing", "Q", "Qbar") if quadratic else ("lie_hamiltonian", "ghost_pairing")
    for name in gated:
        run.gate(f"{name}_drift", drift[name], tol, drift[name] <= tol)
    run.gate("ghost_vs_monodromy", tangent["ghost_error"], sec["tangent_tolerance"],
             tangent["ghost_error"] <= sec["tangent_tolerance"])
    run.gate("monodromy_vs_finite_difference", tangent["jacobian_error"], sec["jacobian_tolerance"],
             tangent["jacobian_error"] <= sec["jacobian_tolerance"])
    ratio = errs[0] / errs[1] if errs[1] > 0 else float("inf")
    run.gate("rk4_error_ratio", ratio, [lo, hi], lo <= ratio <= hi)
    run.results = {
        "quadratic": quadratic,
        "charge_drift": drift,
        "tangent": tangent,
        "ratio_dt": [sec["ratio_dt"], sec["ratio_dt"] / 2],
        "state_errors": errs,
        "lie_hamiltonian_drifts": drifts,
        "lie_hamiltonian_ratio": drifts[0] / drifts[1] if drifts[1] > 0 else float("inf"),
    }


def _scheme(sec, n_slices=None) -> SlicingScheme:
    try:
        return SlicingScheme(sec["time"], n_slices or sec["n_slices"], tuple(sec["x_range"]), sec["n_points"])
    except ValueError as exc:
        raise ConfigError(f"scheme: {exc}") from None


def _check_propagator_hamiltonian(H, section: str):
    if H.n != 1 or not H.is_separable():
        raise ConfigError(f"hamiltonian: unsupported form for {section}; need n = 1 and H = T(p) + V(q)")


def _has_closed_form(H, representation="position") -> bool:
    try:
        _closed_form_parameters(H, representation)
    except ValueError:
        return False
    return True


def cmd_propagate(run: Run):
    sec = run.cfg.section("propagate")
    H = run.cfg.hamiltonian
    _check_propagator_hamiltonian(H, "propagate")
    if not sec["delta"] > 0:
        raise ConfigError(f"propagate.delta: must be > 0, got {sec['delta']}")
    rep = sec["representation"]
    if rep not in ("position", "momentum"):
        raise ConfigError(f"propagate.representation: expected position or momentum, got {rep!r}")
    build = position_propagator if rep == "position" else momentum_propagator
    prop = build(H, _scheme(sec), sec["delta"])
    unit = unitarity_error(prop)
    run.gate("unitarity", unit, sec["unitarity_tolerance"], unit <= sec["unitarity_tolerance"])
    if sec["write_kernel"]:
        meta = {"config_hash": run.cfg.config_hash, "seed": run.cfg.seed, "kind": f"{rep}-kernel",
                "axes": ["final", "initial"]}
        lo, hi = float(prop.grid[0]), float(prop.grid[-1] + prop.spacing)
        run.files["kernel.kvg"] = encode_grid(prop.kernel, ((lo, hi), (lo, hi)), meta)
    results = {"representation": rep, "unitarity_error": unit, "n_slices": sec["n_slices"]}
    if _has_closed_form(H, rep) and sec["time"] > 0:
        try:
            err = oracle_error(prop, H)
        except ValueError as exc:
            raise ConfigError(f"propagate: {exc}") from None
        run.gate("oracle_error", err, sec["oracle_tolerance"], err <= sec["oracle_tolerance"])
        results["oracle_error"] = err
    else:
        run.warn("no closed-form kernel for this Hamiltonian; oracle comparison skipped")
    kinetic, potential = H.split()
    if _has_closed_form(H) and potential.terms and sec["time"] > 0:
        table = trotter_table(H, sec["time"], tuple(sec["trotter_slices"]), tuple(sec["x_range"]),
                              sec["n_points"], sec["delta"])
        run.add_csv("trotter.csv", _csv(run.header, ["n_slices", "oracle_error", "ratio"], table))
        lo, hi = sec["ratio_range"]
        ratios = [row[2] for row in table[1:]]
        run.gate("trotter_ratios", ratios, [lo, hi], all(lo <= q <= hi for q in ratios))
        results["trotter"] = [list(row) for row in table]
    elif _has_closed_form(H):
        run.warn("pure kinetic Hamiltonian: the split is exact, no Trotter table")
    run.results = results


def cmd_duality(run: Run):
    sec = run.cfg.section("duality")
    H = run.cfg.hamiltonian
    _check_propagator_hamiltonian(H, "duality")
    if not sec["delta"] > 0:
        raise ConfigError(f"duality.delta: must be > 0, got {sec['delta']}")
    scheme = _scheme(sec)
    pos, mom = _pool_map(
        lambda f: f(H, scheme, sec["delta"]), [position_propagator, momentum_propagator], run.cfg.threads
    )
    resolved = fourier_duality_check(pos, mom)
    full = fourier_duality_check(pos, mom, basis=False)
    run.gate("duality_residual", resolved, sec["tolerance"], resolved <= sec["tolerance"])
    run.results = {"resolved_residual": resolved, "full_norm_residual": full}


def cmd_bridge(run: Run):
    sec = run.cfg.section("bridge")
    H = run.cfg.hamiltonian
    if H.n != 1:
        raise ConfigError("hamiltonian: the lattice bridge needs n = 1")
    kwargs = dict(
        n_points=sec["n_points"], n_slices=sec["n_slices"], time=sec["time"],
        x_range=tuple(sec["x_range"]), delta=sec["delta"],
    )
    try:
        report = bridge_demonstration(H, superfield_samples=sec["superfield_samples"], seed=run.cfg.seed, **kwargs)
        scaling = delta_scaling_check(H, seed=run.cfg.seed, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"bridge: {exc}") from None
    run.gate("path_sum_vs_transfer", report.relative_error, sec["tolerance"], report.relative_error <= sec["tolerance"])
    run.gate("superfield_restriction_identical", report.superfield_checked, report.superfield_checked,
             report.superfield_identical)
    run.gate("delta_scaling_identical", scaling["n_phases"], scaling["n_phases"], scaling["identical"])
    rows = [[jf, ji, report.path_sum[jf, ji].real, report.path_sum[jf, ji].imag,
             report.transfer_kernel[jf, ji].real, report.transfer_kernel[jf, ji].imag] for jf, ji in report.entries]
    run.add_csv("bridge_entries.csv",
                _csv(run.header, ["final", "initial", "re_path_sum", "im_path_sum", "re_transfer", "im_transfer"], rows))
    run.results = {**report.summary(), "delta_scaling": scaling}


COMMANDS = {
    "check-superfield": cmd_check_superfield,
    "evolve": cmd_evolve,
    "propagate": cmd_propagate,
    "simulate-cpi": cmd_simulate_cpi,
    "duality": cmd_duality,
    "bridge": cmd_bridge,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kvnquant", description="Superspace path-integral verification runs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="TOML run configuration (defaults when omitted)")
        p.add_argument("--out", metavar="DIR", help="output directory (default: ./kvnquant-out/<command>)")
        p.add_argument("--seed", metavar="U64", type=int, help="overrides the seed in the config")
        p.add_argument("--threads", metavar="N", type=int, help="worker threads for independent scenarios")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _write(out: Path, run: Run):
    out.mkdir(parents=True, exist_ok=True)
    for name in sorted(run.files):
        (out / name).write_bytes(run.files[name])
    text = json.dumps(_clean(run.summary()), sort_keys=True, indent=2) + "\n"
    (out / f"{run.command.replace('-', '_')}_summary.json").write_text(text, encoding="utf-8")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = check_seed(args.seed)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError(f"--threads: must be >= 1, got {args.threads}")
            cfg.threads = args.threads
        run = Run(args.command, cfg)
        COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg.extras.get("out") or Path("kvnquant-out") / args.command)
    _write(out, run)
    for name, g in run.gates.items():
        print(f"{'PASS' if g['passed'] else 'FAIL'} {name}: {g['value']} (limit {g['limit']})")
    print(f"{args.command}: {'passed' if run.passed else 'FAILED'}; outputs in {out}")
    return EXIT_OK if run.passed else EXIT_GATE


if __name__ == "__main__":
    sys.exit(main())
