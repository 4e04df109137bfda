"""Strict JSON run configuration.

User-facing energies carry a ``_meV`` suffix and are converted to μeV when
the physical objects are built; nothing else in the package sees meV.
Every key is checked against a fixed schema, unknown keys are rejected,
and omitted keys are filled with their defaults.  The provenance map
records which values came from the file and which were defaulted.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field

import numpy as np

from qdcavity.core.levels import POLARIZATIONS, build_level_system
from qdcavity.core.params import (
    DEFAULT_BG_SCALE,
    DEFAULT_DELTA_OMEGA,
    PUBLISHED_GAMMA_0,
    PUBLISHED_OMEGA_C,
    PUBLISHED_OMEGA_D,
    PUBLISHED_SHARED,
    CavityDotParams,
    MagneticFieldConfig,
)
from qdcavity.dynamics.pumping import DEFAULT_T1
from qdcavity.dynamics.rabi import DEFAULT_AREA_DECAY
from qdcavity.dynamics.rotation import DEFAULT_COUPLING_SCALE
from qdcavity.errors import ConfigError, InvalidParameterError
from qdcavity.spectrofit import DEFAULT_PENALTY_WEIGHT, DEFAULT_POINTS, DEFAULT_SPAN

TASKS = ("fit-reflectivity", "synth", "ramsey", "rabi", "rotation-scan", "pumping")
FORMATS = ("json", "csv")
MEV = 1000.0  # μeV per meV


class _Req:
    """Marker for keys without a default."""

    def __repr__(self):
        return "REQUIRED"


REQUIRED = _Req()


# Each schema maps key -> (default, checker).  A checker returns the
# normalized value or raises ConfigError.

def _number(lo=-math.inf, hi=math.inf, lo_open=False, nullable=False, integer=False):
    def check(value, where):
        if value is None and nullable:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        if integer:
            if not isinstance(value, int):
                raise ConfigError(f"{where}: expected an integer, got {value!r}")
        else:
            value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{where}: must be finite")
        if value < lo or (lo_open and value == lo) or value > hi:
            bracket = "(" if lo_open else "["
            raise ConfigError(f"{where}: {value!r} outside {bracket}{lo}, {hi}]")
        return value
    return check


def _boolean(value, where):
    if not isinstance(value, bool):
        raise ConfigError(f"{where}: expected true or false, got {value!r}")
    return value


def _choice(*options, nullable=False):
    def check(value, where):
        if value is None and nullable:
            return None
        if value not in options:
            raise ConfigError(f"{where}: expected one of {list(options)}, got {value!r}")
        return value
    return check


def _string(nullable=False):
    def check(value, where):
        if value is None and nullable:
            return None
        if not isinstance(value, str) or not value:
            raise ConfigError(f"{where}: expected a non-empty string, got {value!r}")
        return value
    return check


def _list_of(item, min_len=1, nullable=False):
    def check(value, where):
        if value is None and nullable:
            return None
        if not isinstance(value, list) or len(value) < min_len:
            raise ConfigError(f"{where}: expected a list with at least {min_len} entries")
        return [item(v, f"{where}[{i}]") for i, v in enumerate(value)]
    return check


def _table(schema, nullable=False):
    def check(value, where):
        if value is None and nullable:
            return None
        out, _ = _resolve(value, schema, where)
        return out
    return check


def _variant(key, schemas, nullable=False):
    """Table whose schema is selected by the value of ``key``."""
    def check(value, where):
        if value is None and nullable:
            return None
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a table")
        kind = value.get(key)
        if kind not in schemas:
            raise ConfigError(f"{where}.{key}: expected one of {sorted(schemas)}, got {kind!r}")
        out, _ = _resolve(value, schemas[kind], where)
        return out
    return check


def _grid(unit):
    """Either an explicit increasing list or ``{start, stop, num}``."""
    spec = {f"start_{unit}": (REQUIRED, _number()), f"stop_{unit}": (REQUIRED, _number()),
            "num": (REQUIRED, _number(lo=1, integer=True))}

    def check(value, where):
        if isinstance(value, list):
            vals = _list_of(_number())(value, where)
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ConfigError(f"{where}: values must be strictly increasing")
            return vals
        out, _ = _resolve(value, spec, where)
        if out["num"] > 1 and out[f"stop_{unit}"] <= out[f"start_{unit}"]:
            raise ConfigError(f"{where}: stop must exceed start")
        return out
    return check


def _nullable_grid(unit):
    inner = _grid(unit)

    def check(value, where):
        return None if value is None else inner(value, where)
    return check


def grid_values(value, unit):
    """Expand a resolved grid entry into an array (same unit)."""
    if isinstance(value, list):
        return np.asarray(value, dtype=float)
    return np.linspace(value[f"start_{unit}"], value[f"stop_{unit}"], value["num"])


CAVITY_DOT_SCHEMA = {
    "omega_C_meV": (PUBLISHED_OMEGA_C[0] / MEV, _number(lo=0.0, lo_open=True)),
    "omega_D_meV": (PUBLISHED_OMEGA_D[0] / MEV, _number(lo=0.0, lo_open=True)),
    "Gamma_C_meV": (PUBLISHED_SHARED["Gamma_C"] / MEV, _number(lo=0.0, lo_open=True)),
    "Gamma_D_meV": (PUBLISHED_SHARED["Gamma_D"] / MEV, _number(lo=0.0, lo_open=True)),
    "g_C_meV": (PUBLISHED_SHARED["g_C"] / MEV, _number(lo=0.0)),
    "phi_rad": (PUBLISHED_SHARED["phi"], _number(lo=-math.pi, hi=math.pi)),
    "bg_scale_meV": (DEFAULT_BG_SCALE / MEV, _number(lo=0.0)),
    "delta_omega_meV": (DEFAULT_DELTA_OMEGA / MEV, _number()),
    "Gamma_0_meV": (PUBLISHED_GAMMA_0 / MEV, _number(lo=0.0, lo_open=True)),
}
FIELD_SCHEMA = {
    "B_x_T": (0.0, _number(lo=0.0)),
    "g_electron": (MagneticFieldConfig.g_electron, _number()),
    "g_hole": (MagneticFieldConfig.g_hole, _number()),
}
LEVELS_SCHEMA = {
    "dipole_axis_angle_rad": (0.0, _number()),
    # null: use the cavity_dot dot energy
    "transition_energy_meV": (None, _number(lo=0.0, lo_open=True, nullable=True)),
}
PHYSICAL_SCHEMA = {
    "cavity_dot": (None, _table(CAVITY_DOT_SCHEMA)),
    "field": (None, _table(FIELD_SCHEMA)),
    "levels": (None, _table(LEVELS_SCHEMA)),
}
OUTPUT_SCHEMA = {
    "directory": ("out", _string()),
    "formats": (list(FORMATS), _list_of(_choice(*FORMATS))),
}

_POL = _choice(*POLARIZATIONS)
INSTANT_PULSE = {
    "kind": (REQUIRED, _choice("instantaneous")),
    "angle_rad": (math.pi / 2, _number(lo=0.0)),
}
SECH_PULSE = {
    "kind": (REQUIRED, _choice("sech")),
    "fwhm_ps": (13.0, _number(lo=0.0, lo_open=True)),
    "detuning_meV": (-0.56, _number()),
    "polarization": ("circular_plus", _POL),
    "angle_rad": (math.pi / 2, _number(lo=0.0, lo_open=True)),
}
PULSE = _variant("kind", {"instantaneous": INSTANT_PULSE, "sech": SECH_PULSE})
# rabi scans fix the power unit to the π/2 pulse, so templates carry no angle
PULSE_TEMPLATE = _variant("kind", {
    "instantaneous": {"kind": INSTANT_PULSE["kind"]},
    "sech": {k: v for k, v in SECH_PULSE.items() if k != "angle_rad"},
})

_TEMPERATURE_INDEX = _number(lo=0, hi=len(PUBLISHED_OMEGA_D) - 1, integer=True)
_NULLABLE_PS = _number(lo=0.0, lo_open=True, nullable=True)
_DATASET_GUESS = {
    "omega_C_meV": (REQUIRED, _number(lo=0.0, lo_open=True)),
    "omega_D_meV": (REQUIRED, _number(lo=0.0, lo_open=True)),
}

TASK_SCHEMAS = {
    "synth": {
        # null: one spectrum from physical.cavity_dot; otherwise one per
        # listed temperature with the published energies of that temperature
        "temperature_indices": (None, _list_of(_TEMPERATURE_INDEX, nullable=True)),
        # null: centered between ω_C and ω_D, see synthetic_grid
        "grid_meV": (None, _nullable_grid("meV")),
        "span_meV": (DEFAULT_SPAN / MEV, _number(lo=0.0, lo_open=True)),
        "n_points": (DEFAULT_POINTS, _number(lo=2, integer=True)),
        "noise_fraction": (0.0, _number(lo=0.0)),
        "amplitude": (1.0, _number()),
        "form": ("expanded", _choice("expanded", "exact")),
    },
    "fit-reflectivity": {
        "data_files": (None, _list_of(_string(), nullable=True)),
        "temperature_indices": (list(range(len(PUBLISHED_OMEGA_D))), _list_of(_TEMPERATURE_INDEX)),
        "noise_fraction": (0.01, _number(lo=0.0)),
        "span_meV": (DEFAULT_SPAN / MEV, _number(lo=0.0, lo_open=True)),
        "n_points": (DEFAULT_POINTS, _number(lo=2, integer=True)),
        "per_dataset_guess": (None, _list_of(_table(_DATASET_GUESS), nullable=True)),
        "amplitude_guess": (1.0, _number(lo=0.0, lo_open=True)),
        "guess_perturbation": (0.0, _number(lo=0.0, hi=0.9)),
        "delta_omega_guess_meV": (0.0, _number()),
        "penalty_weight": (DEFAULT_PENALTY_WEIGHT, _number(lo=0.0)),
        "max_iterations": (200, _number(lo=1, integer=True)),
        "staged": (True, _boolean),
        "restarts": (2, _number(lo=0, hi=4, integer=True)),
    },
    "ramsey": {
        "pulse": ({"kind": "instantaneous"}, PULSE),
        "tau_ps": ({"start_ps": 0.0, "stop_ps": 2000.0, "num": 201}, _grid("ps")),
        "t2_star_ps": (None, _NULLABLE_PS),
        "n_samples": (1, _number(lo=1, integer=True)),
        "T1_ps": (None, _NULLABLE_PS),
        "coupling_scale": (0.0, _number(lo=0.0)),
        "cavity_decay": (False, _boolean),
        "readout_index": (0, _number(lo=0, hi=1, integer=True)),
        "initial_index": (0, _number(lo=0, hi=1, integer=True)),
        "fit_envelope": ("gaussian", _choice("gaussian", "exponential", nullable=True)),
    },
    "rabi": {
        "pulse": ({"kind": "sech"}, PULSE_TEMPLATE),
        "power": ([0.5, 1.0, 2.0, 3.0, 4.0], _list_of(_number(lo=0.0))),
        # null: five Larmor periods after the pulses separate
        "tau_ps": (None, _nullable_grid("ps")),
        # null disables the area damping
        "area_decay_rad": (DEFAULT_AREA_DECAY, _number(lo=0.0, lo_open=True, nullable=True)),
        "t2_star_ps": (None, _NULLABLE_PS),
        "n_samples": (1, _number(lo=1, integer=True)),
        "T1_ps": (None, _NULLABLE_PS),
        "coupling_scale": (0.0, _number(lo=0.0)),
    },
    "rotation-scan": {
        "detuning_meV": ({"start_meV": -0.8, "stop_meV": 0.5, "num": 53}, _grid("meV")),
        "coupling_scale": (DEFAULT_COUPLING_SCALE, _number(lo=0.0)),
        "tolerance": (1e-8, _number(lo=0.0, lo_open=True)),
    },
    "pumping": {
        "transitions": ([0, 1, 2, 3], _list_of(_number(lo=0, hi=3, integer=True))),
        "rabi_per_ps": ([1.0], _list_of(_number(lo=0.0))),
        "T1_ps": (DEFAULT_T1, _NULLABLE_PS),
        "cavity_decay": (True, _boolean),
        "n_samples": (200, _number(lo=10, integer=True)),
    },
}


TOP_SCHEMA_KEYS = ("task", "seed", "physical", "task_params", "output")


def _resolve(value, schema, where):
    """Check ``value`` against ``schema``; returns (resolved, provenance)."""
    if value is None:
        value = {}
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: expected a table")
    unknown = sorted(set(value) - set(schema))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    out, prov = {}, {}
    for key, (default, check) in schema.items():
        path = f"{where}.{key}"
        if key in value:
            out[key] = check(value[key], path)
            prov[path] = "config"
        elif default is REQUIRED:
            raise ConfigError(f"{path}: required")
        else:
            out[key] = check(copy.deepcopy(default), path) if default is not None else None
            prov[path] = "default"
    return out, prov


@dataclass
class RunConfig:
    """Resolved run configuration; every key present with its final value."""

    task: str
    seed: int
    physical: dict
    task_params: dict
    output: dict
    provenance: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("config: expected a JSON object")
        unknown = sorted(set(raw) - set(TOP_SCHEMA_KEYS))
        if unknown:
            raise ConfigError(f"config: unknown keys {unknown}")
        task = raw.get("task")
        if task not in TASKS:
            raise ConfigError(f"config.task: expected one of {list(TASKS)}, got {task!r}")
        seed = _number(lo=0, integer=True)(raw.get("seed", 0), "config.seed")
        prov = {"config.task": "config", "config.seed": "config" if "seed" in raw else "default"}
        phys_raw = raw.get("physical", {})
        if not isinstance(phys_raw, dict):
            raise ConfigError("config.physical: expected a table")
        unknown = sorted(set(phys_raw) - set(PHYSICAL_SCHEMA))
        if unknown:
            raise ConfigError(f"config.physical: unknown keys {unknown}")
        physical = {}
        for name, sub in (("cavity_dot", CAVITY_DOT_SCHEMA), ("field", FIELD_SCHEMA),
                          ("levels", LEVELS_SCHEMA)):
            physical[name], p = _resolve(phys_raw.get(name), sub, f"config.physical.{name}")
            prov.update(p)
        task_params, p = _resolve(raw.get("task_params"), TASK_SCHEMAS[task], "config.task_params")
        prov.update(p)
        output, p = _resolve(raw.get("output"), OUTPUT_SCHEMA, "config.output")
        prov.update(p)
        cfg = cls(task, seed, physical, task_params, output, prov)
        cfg.check_physics()
        return cfg

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(parse_json(text))

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        return cls.from_json(text)

    def to_dict(self):
        return {"task": self.task, "seed": self.seed, "physical": copy.deepcopy(self.physical),
                "task_params": copy.deepcopy(self.task_params), "output": copy.deepcopy(self.output)}

    def with_overrides(self, seed=None, directory=None, formats=None):
        """Copy with command-line overrides applied (provenance ``cli``)."""
        raw = self.to_dict()
        prov = dict(self.provenance)
        if seed is not None:
            raw["seed"] = seed
            prov["config.seed"] = "cli"
        if directory is not None:
            raw["output"]["directory"] = directory
            prov["config.output.directory"] = "cli"
        if formats is not None:
            raw["output"]["formats"] = list(formats)
            prov["config.output.formats"] = "cli"
        cfg = RunConfig.from_dict(raw)
        cfg.provenance = prov
        return cfg

    # physical objects, μeV internally

    def cavity_dot(self):
        cd = self.physical["cavity_dot"]
        return CavityDotParams(
            omega_C=cd["omega_C_meV"] * MEV, omega_D=cd["omega_D_meV"] * MEV,
            Gamma_C=cd["Gamma_C_meV"] * MEV, Gamma_D=cd["Gamma_D_meV"] * MEV,
            g_C=cd["g_C_meV"] * MEV, phi=cd["phi_rad"], bg_scale=cd["bg_scale_meV"] * MEV,
            delta_omega=cd["delta_omega_meV"] * MEV, Gamma_0=cd["Gamma_0_meV"] * MEV)

    def magnetic_field(self):
        f = self.physical["field"]
        return MagneticFieldConfig(B_x=f["B_x_T"], g_electron=f["g_electron"], g_hole=f["g_hole"])

    def level_system(self):
        lv = self.physical["levels"]
        p = self.cavity_dot()
        energy = p.omega_D if lv["transition_energy_meV"] is None else lv["transition_energy_meV"] * MEV
        return build_level_system(self.magnetic_field(), energy, lv["dipole_axis_angle_rad"], p.Gamma_0)

    def check_physics(self):
        try:
            self.level_system()
        except InvalidParameterError as exc:
            raise ConfigError(f"config.physical: {exc}") from exc


def _reject_constant(name):
    raise ConfigError(f"config: non-standard JSON constant {name} not allowed")


def _no_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ConfigError(f"config: duplicate key {key!r}")
        out[key] = value
    return out


def parse_json(text):
    """``json.loads`` that rejects NaN/Infinity and duplicate keys."""
    try:
        return json.loads(text, parse_constant=_reject_constant, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
