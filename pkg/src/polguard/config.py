"""Scenario/parameter config files (JSON) with field-level diagnostics.

The CLI consumes one JSON document describing a scenario; every validation
failure raises :class:`ConfigError` carrying the dotted field path so the
CLI can emit a machine-readable error object and exit with code 2.
"""

from __future__ import annotations

import json
from typing import Optional

import numpy as np

from polguard.adversary import (
    ATTACK_KINDS,
    AttackConfig,
    EveMeasurementParams,
    EveSourceConfig,
    intercept_resend_preset,
)
from polguard.analysis import SystemParams
from polguard.datasets import (
    DEFAULT_ALERT_GEIGER,
    DEFAULT_SECURE_GEIGER,
    desk_scale_attack,
    desk_scale_system,
    load_builtin_detectors,
)
from polguard.detectors import DetectorModel, GeigerParams, load_threshold_csv
from polguard.simengine import MODE_IDS, Scenario

SCHEMA_VERSION = 1

PRESETS = (
    "honest",
    "intercept_resend",
    "quantum",
    "blinding",
    "wavelength_blinding",
    "integrated",
)


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(message)

    def to_json_dict(self) -> dict:
        return {"error": {"field": self.field, "message": str(self)}}


def _get(data: dict, field: str, kind, default=None, required: bool = False, path: str = ""):
    full = f"{path}.{field}" if path else field
    if field not in data:
        if required:
            raise ConfigError(full, f"missing required field {full!r}")
        return default
    value = data[field]
    try:
        value = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(full, f"{full!r} must be of type {kind.__name__}, got {value!r}") from None
    return value


def _positive(value, field):
    if value < 0:
        raise ConfigError(field, f"{field!r} must be >= 0, got {value}")
    return value


def _geiger_list(entries, count: int, path: str) -> tuple:
    if entries is None:
        return None
    if not isinstance(entries, list) or len(entries) != count:
        raise ConfigError(path, f"{path!r} must be a list of {count} detector objects")
    out = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}[{i}]", "detector entries must be objects")
        eff = _get(entry, "efficiency", float, required=True, path=f"{path}[{i}]")
        bg = _get(entry, "background", float, default=0.0, path=f"{path}[{i}]")
        try:
            out.append(GeigerParams(efficiency=eff, background=bg))
        except ValueError as exc:
            raise ConfigError(f"{path}[{i}]", str(exc)) from None
    return tuple(out)


def system_from_dict(data: Optional[dict], eve: EveMeasurementParams) -> SystemParams:
    data = data or {}
    alert = _geiger_list(data.get("alert_detectors"), 2, "system.alert_detectors")
    secure = _geiger_list(data.get("secure_detectors"), 4, "system.secure_detectors")
    kwargs = dict(
        alert_geiger=alert or DEFAULT_ALERT_GEIGER,
        secure_geiger=secure or DEFAULT_SECURE_GEIGER,
        fidelity=_get(data, "fidelity", float, 0.98, path="system"),
        eve=eve,
        resend_mu=_positive(_get(data, "resend_mu", float, 1.0, path="system"), "system.resend_mu"),
        switch_rate=_get(data, "switch_rate", float, 0.0, path="system"),
        source_mu=_positive(_get(data, "mu", float, 0.5, path="system"), "system.mu"),
        transmittance=_get(data, "transmittance", float, 1.0, path="system"),
        trigger_purity=_get(data, "trigger_purity", float, 1.0, path="system"),
        decoy_states=bool(data.get("decoy_states", False)),
    )
    try:
        return SystemParams(**kwargs)
    except ValueError as exc:
        raise ConfigError("system", str(exc)) from None


def eve_from_dict(data: Optional[dict]) -> EveMeasurementParams:
    data = data or {}
    kwargs = dict(
        mu=_get(data, "mu", float, 0.5, path="eve"),
        fidelity=_get(data, "fidelity", float, 0.98, path="eve"),
        efficiency=_get(data, "efficiency", float, 0.6, path="eve"),
    )
    try:
        return EveMeasurementParams(**kwargs)
    except ValueError as exc:
        raise ConfigError("eve", str(exc)) from None


def attack_from_dict(data: Optional[dict], eve: EveMeasurementParams, mode: str) -> Optional[AttackConfig]:
    if data is None:
        if mode == "honest":
            return None
        if mode == "intercept_resend":
            return intercept_resend_preset()
        data = {}
    kind = _get(data, "kind", str, mode, path="attack")
    if kind not in ATTACK_KINDS:
        raise ConfigError("attack.kind", f"unknown attack kind {kind!r}")
    source = EveSourceConfig(
        theta1=np.deg2rad(_get(data, "theta1_deg", float, 0.0, path="attack")),
        theta2=np.deg2rad(_get(data, "theta2_deg", float, 0.0, path="attack")),
        qwp_angle=np.deg2rad(_get(data, "qwp_deg", float, -45.0, path="attack")),
        phi_e=_get(data, "phi_e", float, 0.0, path="attack"),
        pulse_energy_pj=_positive(
            _get(data, "pulse_energy_pj", float, 1.15, path="attack"), "attack.pulse_energy_pj"
        ),
    )
    weights = data.get("weights", [1.0, 0.0, 0.0] if kind != "integrated" else [1 / 3, 1 / 3, 1 / 3])
    if not isinstance(weights, list) or len(weights) != 3:
        raise ConfigError("attack.weights", "weights must be a list of three numbers")
    try:
        return AttackConfig(
            kind=kind,
            source=source,
            measurement=eve,
            resend_mu=_positive(_get(data, "resend_mu", float, 1.0, path="attack"), "attack.resend_mu"),
            blinding_power_mw=_get(data, "blinding_power_mw", float, 1.09, path="attack"),
            blinding_purity=_get(data, "blinding_purity", float, 0.5, path="attack"),
            perfect_secure_control=bool(data.get("perfect_secure_control", False)),
            weights=tuple(float(w) for w in weights),
            clamp_thresholds=bool(data.get("clamp_thresholds", False)),
        )
    except ValueError as exc:
        raise ConfigError("attack", str(exc)) from None


def detectors_from_spec(spec, path: str = "attack.thresholds") -> list[DetectorModel]:
    """'builtin:correct', 'builtin:swapped', or {'alert': [...], 'secure': [...]}."""
    if spec is None or spec == "builtin:correct":
        return load_builtin_detectors("correct")
    if spec == "builtin:swapped":
        return load_builtin_detectors("swapped")
    if isinstance(spec, dict):
        alert_paths = spec.get("alert", [])
        secure_paths = spec.get("secure", [])
        if len(alert_paths) != 2 or len(secure_paths) != 4:
            raise ConfigError(path, "thresholds need 2 alert and 4 secure CSV paths")
        return detectors_from_csvs(alert_paths, secure_paths)
    raise ConfigError(path, f"unrecognized threshold spec {spec!r}")


def detectors_from_csvs(alert_paths, secure_paths,
                        alert_geiger=DEFAULT_ALERT_GEIGER,
                        secure_geiger=DEFAULT_SECURE_GEIGER) -> list[DetectorModel]:
    out = []
    for label, paths, geigers in (
        ("alert", alert_paths, alert_geiger),
        ("secure", secure_paths, secure_geiger),
    ):
        for i, p in enumerate(paths):
            name = f"{label[0]}{i + 1}"
            tables = load_threshold_csv(p, name=name)
            for variant, (never, always) in tables.items():
                out.append(
                    DetectorModel(
                        geiger=geigers[i],
                        e_never=never,
                        e_always=always,
                        label=label,
                        gate_variant=variant,
                        name=name,
                    )
                )
    return out


def scenario_from_dict(data: dict, overrides: Optional[dict] = None) -> Scenario:
    """Build a Scenario from a parsed config document.

    ``overrides`` may set rounds/seed/workers/fixed_u from CLI flags.
    """
    if not isinstance(data, dict):
        raise ConfigError("", "config root must be a JSON object")
    version = _get(data, "schema_version", int, SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported schema_version {version}")
    mode = _get(data, "mode", str, required=True)
    if mode not in MODE_IDS:
        raise ConfigError("mode", f"unknown mode {mode!r}; choose from {sorted(MODE_IDS)}")
    eve = eve_from_dict(data.get("eve"))
    system = system_from_dict(data.get("system"), eve)
    attack = attack_from_dict(data.get("attack"), eve, mode)
    if attack is not None:
        # keep the closed-form averaging range locked to the actual trigger
        # state so analytic and Monte Carlo reports describe the same attack
        from dataclasses import replace as _replace

        system = _replace(system, trigger_purity=attack.trigger_purity,
                          resend_mu=attack.resend_mu)
    detectors = None
    if mode in ("blinding", "integrated"):
        detectors = detectors_from_spec((data.get("attack") or {}).get("thresholds"))
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    kwargs = dict(
        mode=mode,
        system=system,
        attack=attack,
        detectors=detectors,
        rounds=int(overrides.get("rounds") or _get(data, "rounds", int, 100_000)),
        seed=int(overrides["seed"]) if "seed" in overrides
        else _get(data, "seed", int, 0),
        workers=int(overrides.get("workers") or _get(data, "workers", int, 1)),
        fixed_u=bool(overrides.get("fixed_u", data.get("fixed_u", False))),
    )
    if kwargs["rounds"] < 1:
        raise ConfigError("rounds", f"rounds must be >= 1, got {kwargs['rounds']}")
    if kwargs["workers"] < 1:
        raise ConfigError("workers", f"workers must be >= 1, got {kwargs['workers']}")
    try:
        return Scenario(**kwargs)
    except ValueError as exc:
        raise ConfigError("", str(exc)) from None


def preset_dict(name: str) -> dict:
    """Config document for a named desk-scale preset."""
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {PRESETS}")
    system = desk_scale_system()
    doc = {
        "schema_version": SCHEMA_VERSION,
        "mode": name,
        "rounds": 1_000_000,
        "seed": 0,
        "workers": 1,
        "system": {
            "fidelity": system.fidelity,
            "switch_rate": 0.25 if name in ("blinding", "wavelength_blinding", "integrated") else 0.0,
            "mu": system.source_mu,
            "transmittance": system.transmittance,
        },
        "eve": {
            "mu": system.eve.mu,
            "fidelity": system.eve.fidelity,
            "efficiency": system.eve.efficiency,
        },
    }
    if name == "honest":
        return doc
    if name == "intercept_resend":
        doc["eve"] = {"mu": 1.0, "fidelity": 1.0, "efficiency": 1.0}
        doc["attack"] = {"kind": "intercept_resend"}
        return doc
    attack = desk_scale_attack(name if name in ATTACK_KINDS else "quantum")
    doc["attack"] = {
        "kind": name,
        "pulse_energy_pj": attack.source.pulse_energy_pj,
        "resend_mu": attack.resend_mu,
        "blinding_power_mw": attack.blinding_power_mw,
        "blinding_purity": attack.blinding_purity,
        "thresholds": "builtin:correct",
    }
    if name == "integrated":
        doc["attack"]["weights"] = [1 / 3, 1 / 3, 1 / 3]
    return doc


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError("", f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"config is not valid JSON: {exc}") from None
