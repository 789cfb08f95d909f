"""Run configuration: a single INI-style text file with fixed sections.

Sections are [model], [lattice], [weight], [experiment] and [tolerances].
Unknown sections or keys are rejected with a diagnostic naming the key and
its line.  The resolved configuration (defaults filled in) is embedded in
every report and hashed for provenance.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .lattice import Boundary, Lattice
from .models import ModelSpec

EXPERIMENTS = ("conductance", "equivalence", "scan-eps", "bloch", "pump",
               "verify-algebra", "weight", "lga-invariance")

_SCHEMA = {
    "model": {
        "kind": str, "u": float, "t1": float, "t2": float, "phi": float,
        "m": float, "flux": "ints", "t": float, "v": float, "mu": float,
        "disorder_strength": float, "rng_seed": int,
    },
    "lattice": {
        "l1": int, "l2": int, "boundary": str, "n_orb": int, "origin": "ints",
    },
    "weight": {
        "smoothness_order": int, "t_factor": float, "ds_factor": float,
    },
    "experiment": {
        "kind": str, "engine": str, "mu": float, "chern_grid": int,
        "eps_list": "floats", "eps": float, "eta": float,
        "window_radius": int, "stripe_k": int, "box_k": int, "shift": "ints",
        "lga_depth": int,
    },
    "tolerances": {
        "quantization": float, "slope": float, "equivalence": float,
        "stripe": float, "origin_shift": float, "invariance": float,
        "resummation": float, "residual_exponent": float, "pump": float,
    },
}

_DEFAULTS = {
    "model": {"kind": "qwz", "u": 1.0, "t1": 1.0, "t2": 0.2, "phi": 1.5707963267948966,
              "m": 0.0, "flux": [1, 3], "t": 1.0, "v": 0.0, "mu": 0.0,
              "disorder_strength": 0.0, "rng_seed": 0},
    "lattice": {"l1": 32, "l2": 32, "boundary": "open", "n_orb": 2, "origin": None},
    "weight": {"smoothness_order": 6, "t_factor": None, "ds_factor": None},
    "experiment": {"kind": "conductance", "engine": "free", "mu": 0.0,
                   "chern_grid": 64, "eps_list": [0.01, 0.02, 0.04, 0.08],
                   "eps": 0.08, "eta": 0.05, "window_radius": 0, "stripe_k": 8,
                   "box_k": 6, "shift": [0, 0], "lga_depth": 2},
    "tolerances": {"quantization": 1e-3, "slope": 5e-3, "equivalence": 1e-2,
                   "stripe": 1e-8, "origin_shift": 1e-6, "invariance": 1e-6,
                   "resummation": 1e-9, "residual_exponent": 3.0, "pump": 1e-6},
}


def _find_line(text: str, token: str) -> int:
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.split(";")[0].split("#")[0]
        if stripped.strip().lower().startswith(token.lower()):
            return i
    return -1


def _coerce(section, key, raw, text):
    want = _SCHEMA[section][key]
    try:
        if want is int:
            return int(raw)
        if want is float:
            return float(raw)
        if want is str:
            return raw.strip().lower()
        if want == "ints":
            return [int(tok) for tok in raw.split()]
        if want == "floats":
            return [float(tok) for tok in raw.split()]
    except ValueError as exc:
        line = _find_line(text, key)
        raise ConfigError(
            f"invalid value for [{section}] {key} (line {line}): {raw!r}") from exc
    raise ConfigError(f"unhandled schema type for {key}")


@dataclass
class RunConfig:
    """Fully resolved run configuration with defaults filled in."""

    sections: dict = field(default_factory=dict)

    def __post_init__(self):
        resolved = {}
        for sec, defaults in _DEFAULTS.items():
            resolved[sec] = dict(defaults)
            resolved[sec].update(self.sections.get(sec, {}))
        self.sections = resolved
        exp = self.sections["experiment"]["kind"]
        if exp not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment kind {exp!r}; choose from {EXPERIMENTS}")
        if self.sections["experiment"]["engine"] not in ("free", "many_body"):
            raise ConfigError("engine must be 'free' or 'many_body'")

    # -- builders ---------------------------------------------------------

    def model_spec(self) -> ModelSpec:
        m = self.sections["model"]
        return ModelSpec(kind=m["kind"], u=m["u"], t1=m["t1"], t2=m["t2"],
                         phi=m["phi"], m=m["m"], flux=tuple(m["flux"]),
                         t=m["t"], V=m["v"], mu=m["mu"],
                         disorder_strength=m["disorder_strength"],
                         rng_seed=m["rng_seed"])

    def lattice(self) -> Lattice:
        lt = self.sections["lattice"]
        origin = tuple(lt["origin"]) if lt["origin"] else None
        return Lattice(lt["l1"], lt["l2"], boundary=Boundary(lt["boundary"]),
                       n_orb=lt["n_orb"], origin=origin)

    @property
    def experiment(self) -> dict:
        return self.sections["experiment"]

    @property
    def tolerances(self) -> dict:
        return self.sections["tolerances"]

    @property
    def weight_params(self) -> dict:
        return self.sections["weight"]

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {sec: dict(vals) for sec, vals in sorted(self.sections.items())}

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def to_ini(self) -> str:
        lines = []
        for sec in sorted(self.sections):
            lines.append(f"[{sec}]")
            for key in sorted(self.sections[sec]):
                val = self.sections[sec][key]
                if val is None:
                    continue
                if isinstance(val, list):
                    val = " ".join(str(v) for v in val)
                lines.append(f"{key} = {val}")
            lines.append("")
        return "\n".join(lines)


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    sections = {}
    for sec in parser.sections():
        low = sec.lower()
        if low not in _SCHEMA:
            line = _find_line(text, f"[{sec}]")
            raise ConfigError(f"unknown section [{sec}] (line {line})")
        sections[low] = {}
        for key, raw in parser.items(sec):
            if key not in _SCHEMA[low]:
                line = _find_line(text, key)
                raise ConfigError(f"unknown key {key!r} in [{sec}] (line {line})")
            sections[low][key] = _coerce(low, key, raw, text)
    return RunConfig(sections)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
