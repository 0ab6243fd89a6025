"""Scenario files: JSON <-> configuration dataclasses.

A scenario is a JSON object with optional sections ``emitter``,
``ensemble``, ``drive`` and ``cavity`` whose keys mirror the dataclass
fields. Energies are in μeV except ``emitter.center_energy`` (eV), times
in ns and powers in W. ``dephasing_tau_d: null`` means no pure dephasing.
The detuning grid may be an explicit list or ``{"start", "stop", "points"}``.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .ensemble import CavityConfig
from .params import Direction, DriveConfig, EmitterConfig, EnergyBranch, EnsembleConfig


class ConfigError(ValueError):
    """Invalid scenario. ``path`` locates the offending field, e.g. ``emitter.beta``."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Scenario:
    emitter: EmitterConfig = EmitterConfig()
    ensemble: EnsembleConfig = EnsembleConfig()
    drive: DriveConfig = DriveConfig()
    cavity: Optional[CavityConfig] = None

    def to_dict(self) -> dict:
        emitter = dataclasses.asdict(self.emitter)
        emitter["strong_branch"] = self.emitter.strong_branch.name
        if math.isinf(emitter["dephasing_tau_d"]):
            emitter["dephasing_tau_d"] = None
        drive = {
            "direction": self.drive.direction.value,
            "power_in_waveguide": self.drive.power_in_waveguide,
            "laser_detuning_grid": list(self.drive.laser_detuning_grid),
        }
        out = {"emitter": emitter, "ensemble": dataclasses.asdict(self.ensemble), "drive": drive}
        if self.cavity is not None:
            out["cavity"] = dataclasses.asdict(self.cavity)
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **sections) -> "Scenario":
        return dataclasses.replace(self, **sections)


_STRONG_BRANCH_ALIASES = {"highenergy": "HighEnergy", "high": "HighEnergy",
                          "lowenergy": "LowEnergy", "low": "LowEnergy"}


def _section(cls, raw, name, convert=None):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(name, "expected a JSON object")
    known = {f.name for f in dataclasses.fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown field")
    kwargs = {}
    for key, value in raw.items():
        try:
            kwargs[key] = convert(key, value) if convert else value
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"{name}.{key}", str(exc)) from None
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        field = next((k for k in kwargs if re.search(rf"\b{k}\b", str(exc))), None)
        raise ConfigError(f"{name}.{field}" if field else name, str(exc)) from None


def _number(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError(f"expected a number, got {value!r}")
    return float(value)


def _emitter_value(key, value):
    if key == "strong_branch":
        name = _STRONG_BRANCH_ALIASES.get(str(value).lower())
        if name is None:
            raise ValueError(f"expected HighEnergy or LowEnergy, got {value!r}")
        return EnergyBranch[name]
    if key == "dephasing_tau_d" and value is None:
        return math.inf
    return _number(key, value)


def _ensemble_value(key, value):
    if key == "quadrature_order":
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"expected an integer, got {value!r}")
        return value
    return _number(key, value)


def _drive_value(key, value):
    if key == "direction":
        return Direction(str(value).lower())
    if key == "laser_detuning_grid":
        if isinstance(value, dict):
            missing = {"start", "stop", "points"} - set(value)
            if missing:
                raise ValueError(f"grid spec missing {sorted(missing)}")
            return tuple(np.linspace(float(value["start"]), float(value["stop"]), int(value["points"])))
        if not isinstance(value, list):
            raise TypeError("expected a list of detunings or a {start, stop, points} object")
        return tuple(_number(key, v) for v in value)
    return _number(key, value)


def scenario_from_dict(raw: dict) -> Scenario:
    if not isinstance(raw, dict):
        raise ConfigError("", "scenario must be a JSON object")
    for key in raw:
        if key not in {"emitter", "ensemble", "drive", "cavity"}:
            raise ConfigError(key, "unknown section")
    cavity = raw.get("cavity")
    return Scenario(
        emitter=_section(EmitterConfig, raw.get("emitter"), "emitter", _emitter_value),
        ensemble=_section(EnsembleConfig, raw.get("ensemble"), "ensemble", _ensemble_value),
        drive=_section(DriveConfig, raw.get("drive"), "drive", _drive_value),
        cavity=None if cavity is None else _section(CavityConfig, cavity, "cavity", _number),
    )


def load_scenario(path) -> Scenario:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path}: invalid JSON ({exc})") from None
    return scenario_from_dict(raw)
