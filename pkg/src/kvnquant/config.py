"""Run configuration: a TOML file with one table per subcommand.

Example::

    seed = 7

    [hamiltonian]
    preset = "quartic"      # harmonic | free | quartic, or give `terms`
    coupling = 0.25
    # terms = [[[0, 2], 0.5], [[2, 0], 0.5]]

    [evolve]
    time = 1.5707963267948966
    grid_points = 256

Unknown keys are rejected so that typos do not silently fall back to defaults.
Any key whose name ends in ``tolerance`` must be strictly positive.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .hamiltonian import PolynomialHamiltonian, free_particle, harmonic, quartic

__all__ = ["ConfigError", "DEFAULTS", "RunConfig", "load_config"]

HALF_PI = math.pi / 2

DEFAULTS: dict = {
    "hamiltonian": {"preset": "harmonic", "mass": 1.0, "frequency": 1.0, "coupling": 0.25},
    "check_superfield": {
        "instances": 100,
        "max_n": 2,
        "max_degree": 6,
        "min_slices": 3,
        "max_slices": 20,
        "tolerance": 1e-12,
    },
    "evolve": {
        "time": HALF_PI,
        "dt": 1e-2,
        "grid_half_width": 6.0,
        "grid_points": 256,
        "center": [1.0, 0.0],
        "width": 2**-0.5,
        "center_tolerance": 1.0,
        "density_tolerance": 1e-6,
        "norm_tolerance": 1e-6,
        "charge_time": 10.0,
        "charge_dt": 1e-3,
        "charge_store_every": 10,
        "drift_tolerance": 1e-6,
        "write_csv": False,
    },
    "simulate_cpi": {
        "time": 10.0,
        "dt": 1e-3,
        "phi": [1.0, 0.5],
        "store_every": 10,
        "drift_tolerance": 1e-6,
        "quadratic_tolerance": 1e-8,
        "tangent_tolerance": 1e-6,
        "jacobian_tolerance": 1e-5,
        "ratio_dt": 0.0125,
        "ratio_range": [12.0, 20.0],
    },
    "propagate": {
        "time": HALF_PI / 2,
        "n_slices": 256,
        "x_range": [-20.0, 20.0],
        "n_points": 1024,
        "delta": 1.0,
        "representation": "position",
        "oracle_tolerance": 1e-5,
        "unitarity_tolerance": 1e-9,
        "trotter_slices": [8, 16, 32, 64],
        "ratio_range": [3.5, 4.5],
        "write_kernel": False,
    },
    "duality": {
        "time": HALF_PI / 2,
        "n_slices": 256,
        "x_range": [-20.0, 20.0],
        "n_points": 1024,
        "delta": 1.0,
        "tolerance": 1e-4,
    },
    "bridge": {
        "n_points": 7,
        "n_slices": 3,
        "time": 1.0,
        "x_range": [-3.0, 3.0],
        "delta": 1.0,
        "superfield_samples": 64,
        "tolerance": 1e-10,
    },
}

_TOP_LEVEL = {"seed", "threads", "out"}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _type_ok(value, default) -> bool:
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, str):
        return isinstance(value, str)
    if isinstance(default, list):
        return isinstance(value, list)
    return True


def _merge(section: str, given: dict, defaults: dict) -> dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        where = f"{section}.{key}"
        if section == "hamiltonian" and key == "terms":
            out[key] = value
            continue
        if key not in defaults:
            raise ConfigError(f"{where}: unknown key")
        if not _type_ok(value, defaults[key]):
            raise ConfigError(f"{where}: expected {type(defaults[key]).__name__}, got {type(value).__name__}")
        out[key] = float(value) if isinstance(defaults[key], float) else value
    for key, value in out.items():
        if key.endswith("tolerance") and not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
            raise ConfigError(f"{section}.{key}: tolerance must be > 0, got {value}")
    return out


def _build_hamiltonian(spec: dict) -> PolynomialHamiltonian:
    if "terms" in spec:
        try:
            return PolynomialHamiltonian.from_pairs(spec["terms"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"hamiltonian.terms: {exc}") from None
    preset = spec["preset"]
    try:
        if preset == "harmonic":
            return harmonic(spec["mass"], spec["frequency"])
        if preset == "free":
            return free_particle(spec["mass"])
        if preset == "quartic":
            return quartic(spec["coupling"])
    except ZeroDivisionError:
        raise ConfigError("hamiltonian.mass: must be non-zero") from None
    raise ConfigError(f"hamiltonian.preset: unknown preset {preset!r} (harmonic, free, quartic)")


@dataclass
class RunConfig:
    sections: dict
    hamiltonian: PolynomialHamiltonian
    seed: int = 0
    threads: int = 1
    source: str | None = None
    extras: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.sections[name]

    def canonical(self) -> dict:
        """Resolved settings that determine results (the seed is recorded separately)."""
        body = {k: v for k, v in self.sections.items() if k != "hamiltonian"}
        body["hamiltonian"] = self.hamiltonian.to_pairs()
        return body

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed: must be an integer in [0, 2^64), got {seed!r}")
    return seed


def from_mapping(data: dict, source: str | None = None) -> RunConfig:
    sections = {}
    for key in data:
        if key not in DEFAULTS and key not in _TOP_LEVEL:
            raise ConfigError(f"{key}: unknown section")
        if key in DEFAULTS and not isinstance(data[key], dict):
            raise ConfigError(f"{key}: expected a table")
    for name, defaults in DEFAULTS.items():
        sections[name] = _merge(name, data.get(name, {}), defaults)
    H = _build_hamiltonian(sections["hamiltonian"])
    threads = data.get("threads", 1)
    if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
        raise ConfigError(f"threads: must be a positive integer, got {threads!r}")
    extras = {"out": data["out"]} if "out" in data else {}
    return RunConfig(sections, H, check_seed(data.get("seed", 0)), threads, source, extras)


def load_config(path=None) -> RunConfig:
    """Read a TOML file (or the built-in defaults when ``path`` is None)."""
    if path is None:
        return from_mapping({})
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # the decoder message already carries "(at line L, column C)"
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return from_mapping(data, str(path))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
