"""Shipped illustrative detector dataset and documented desk-scale presets.

The threshold tables are synthetic but shape-faithful: monotone increasing
in blinding power with a compressive (concave) profile, a narrow ramp
(``E_always = 1.12 E_never``), and an alert-path detector family that is
more sensitive (lower thresholds) than the secure-path family over the
covered power range.  They are illustrative stand-ins for real hardware
tables, generated by :func:`builtin_threshold_tables` and shipped as CSV
under ``polguard/data`` in the documented schema.

Two curve families:

    sensitive   E_never(I) = 1.00 * I^0.85   (alert detectors a1, a2)
    broad       E_never(I) = 0.97 * I^0.75   (secure detectors b1..b4)

with small per-detector scale offsets and an ungated variant at 0.85x.
With the default blinding-power grid the correct assignment keeps every
secure/alert E_never ratio above 1/2 while the swapped assignment violates
the criterion at the lowest few powers.
"""

from __future__ import annotations

from dataclasses import replace
from importlib import resources

import numpy as np

from polguard.adversary import AttackConfig, EveMeasurementParams, EveSourceConfig
from polguard.analysis import SystemParams
from polguard.detectors import (
    DetectorModel,
    GeigerParams,
    ThresholdCurve,
    load_threshold_csv,
)

KNOT_POWERS_MW = tuple(round(0.05 * k, 2) for k in range(1, 15))  # 0.05 .. 0.70
RAMP_FACTOR = 1.12
UNGATED_SCALE = 0.85

_FAMILIES = {"sensitive": (1.00, 0.85), "broad": (0.97, 0.75)}
_DETECTOR_FILES = {
    "a1": ("sensitive", 1.00),
    "a2": ("sensitive", 1.03),
    "b1": ("broad", 1.00),
    "b2": ("broad", 1.02),
    "b3": ("broad", 0.98),
    "b4": ("broad", 1.04),
}

DEFAULT_ALERT_GEIGER = (
    GeigerParams(efficiency=0.22, background=1.2e-5),
    GeigerParams(efficiency=0.24, background=1.0e-5),
)
DEFAULT_SECURE_GEIGER = (
    GeigerParams(efficiency=0.25, background=1.0e-5),
    GeigerParams(efficiency=0.24, background=1.1e-5),
    GeigerParams(efficiency=0.26, background=0.9e-5),
    GeigerParams(efficiency=0.23, background=1.0e-5),
)

# Documented desk-scale parameter set used by the acceptance suite: the
# trigger energy sits inside the exact ramp-average regime of the gated
# dataset at this blinding power (see tests/test_acceptance.py).
DESK_BLINDING_POWER_MW = 1.09
DESK_PULSE_ENERGY_PJ = 1.15
DESK_EVE = EveMeasurementParams(mu=0.5, fidelity=0.98, efficiency=0.6)


def builtin_threshold_tables(name: str) -> dict[str, tuple[ThresholdCurve, ThresholdCurve]]:
    """Threshold tables for one builtin detector (a1, a2, b1..b4)."""
    family, scale = _DETECTOR_FILES[name]
    base, exponent = _FAMILIES[family]
    powers = np.array(KNOT_POWERS_MW)
    never = base * scale * powers**exponent
    tables = {}
    for variant, vscale in (("gated", 1.0), ("ungated", UNGATED_SCALE)):
        tables[variant] = (
            ThresholdCurve(powers, vscale * never, label=f"{name}:{variant}:E_never"),
            ThresholdCurve(powers, vscale * never * RAMP_FACTOR, label=f"{name}:{variant}:E_always"),
        )
    return tables


def builtin_csv_path(name: str):
    """Path of a shipped per-detector threshold CSV."""
    if name not in _DETECTOR_FILES:
        raise ValueError(f"unknown builtin detector {name!r}")
    return resources.files("polguard.data").joinpath(f"thresholds_{name}.csv")


def load_builtin_detectors(
    assignment: str = "correct",
    gate_variants: tuple[str, ...] = ("gated", "ungated"),
    alert_geiger=DEFAULT_ALERT_GEIGER,
    secure_geiger=DEFAULT_SECURE_GEIGER,
) -> list[DetectorModel]:
    """Builtin detector set with the correct or swapped curve assignment.

    ``swapped`` exchanges the threshold tables of the alert pair with those
    of the first two secure detectors, modeling the unwise choice of putting
    the less sensitive hardware on the alert path.
    """
    if assignment == "correct":
        roles = {"a1": "a1", "a2": "a2", "b1": "b1", "b2": "b2", "b3": "b3", "b4": "b4"}
    elif assignment == "swapped":
        roles = {"a1": "b1", "a2": "b2", "b1": "a1", "b2": "a2", "b3": "b3", "b4": "b4"}
    else:
        raise ValueError(f"assignment must be 'correct' or 'swapped', got {assignment!r}")
    out = []
    for slot, source_name in roles.items():
        label = "alert" if slot.startswith("a") else "secure"
        idx = int(slot[1]) - 1
        geiger = alert_geiger[idx] if label == "alert" else secure_geiger[idx]
        with resources.as_file(builtin_csv_path(source_name)) as path:
            tables = load_threshold_csv(path, name=source_name)
        for variant in gate_variants:
            never, always = tables[variant]
            out.append(
                DetectorModel(
                    geiger=geiger,
                    e_never=never,
                    e_always=always,
                    label=label,
                    gate_variant=variant,
                    name=slot,
                )
            )
    return out


def desk_scale_system(**overrides) -> SystemParams:
    """The documented desk-scale receiver/adversary parameter set."""
    params = SystemParams(
        alert_geiger=DEFAULT_ALERT_GEIGER,
        secure_geiger=DEFAULT_SECURE_GEIGER,
        fidelity=0.98,
        eve=DESK_EVE,
        resend_mu=1.0,
        switch_rate=0.0,
        source_mu=0.5,
        transmittance=1.0,
        trigger_purity=1.0,
    )
    return replace(params, **overrides) if overrides else params


def desk_scale_attack(kind: str, **overrides) -> AttackConfig:
    """Attack presets matching the desk-scale system parameters."""
    base = AttackConfig(
        kind=kind,
        source=EveSourceConfig(theta1=0.0, pulse_energy_pj=DESK_PULSE_ENERGY_PJ),
        measurement=DESK_EVE,
        resend_mu=1.0,
        blinding_power_mw=DESK_BLINDING_POWER_MW,
        weights=(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0) if kind == "integrated" else (1.0, 0.0, 0.0),
    )
    return replace(base, **overrides) if overrides else base


def write_builtin_csvs(directory) -> list:
    """Regenerate the shipped CSVs into ``directory`` (provenance helper)."""
    from pathlib import Path

    from polguard.detectors import save_threshold_csv

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name in _DETECTOR_FILES:
        path = directory / f"thresholds_{name}.csv"
        save_threshold_csv(path, builtin_threshold_tables(name))
        written.append(path)
    return written
