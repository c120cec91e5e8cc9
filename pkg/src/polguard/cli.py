"""Command-line surface: simulate, sweep, rates, audit, pmax, bounds.

Exit codes: 0 success, 1 insecure audit verdict (script-friendly),
2 invalid input (with a machine-readable error object on stderr).
Numeric file output is limited to 9 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from polguard import analysis, qmath, simengine
from polguard._backend import backend_name
from polguard.config import (
    ConfigError,
    detectors_from_csvs,
    detectors_from_spec,
    load_config,
    preset_dict,
    scenario_from_dict,
)
from polguard.detectors import DEFAULT_BLINDING_POWERS, CoverageError, audit_assignment
from polguard.simengine import SCHEMA_VERSION, write_result_json, write_sweep_csv


def _fail(exc: ConfigError) -> int:
    json.dump(exc.to_json_dict(), sys.stderr)
    sys.stderr.write("\n")
    return 2


def _round9(obj):
    if isinstance(obj, float):
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {k: _round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round9(v) for v in obj]
    return obj


def _dump_json(path, payload):
    payload = _round9(payload)
    if path in (None, "-"):
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")


def _scenario_from_args(args) -> "simengine.Scenario":
    if args.config:
        doc = load_config(args.config)
    elif args.preset:
        doc = preset_dict(args.preset)
    else:
        raise ConfigError("", "provide --config FILE or --preset NAME")
    overrides = {
        "rounds": args.rounds,
        "seed": args.seed,
        "workers": args.workers,
        "fixed_u": args.fixed_u or None,
    }
    return scenario_from_dict(doc, overrides)


def _result_csv_row(result) -> dict:
    clicks = result.detector_clicks
    row = {
        "schema_version": SCHEMA_VERSION,
        "mode": result.mode,
        "rounds": result.rounds,
        "seed": result.seed,
        "workers": result.workers,
        "backend": result.backend,
        "alert_rate": result.report.alert_rate,
        "alert_se": result.report.alert_se,
        "sifted_rate": result.report.sifted_rate,
        "sifted_se": result.report.sifted_se,
        "qber": result.report.qber,
        "qber_se": result.report.qber_se,
        "alert_normalizer": result.report.diagnostics.get("alert_normalizer", ""),
    }
    row.update({f"clicks_{k}": v for k, v in clicks.items()})
    return row


def _dump_csv(path, rows: list[dict]):
    import io

    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow({
                k: (f"{v:.9g}" if isinstance(v, float) else v) for k, v in row.items()
            })
    text = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_simulate(args) -> int:
    try:
        scenario = _scenario_from_args(args)
    except ConfigError as exc:
        return _fail(exc)
    result = simengine.run(scenario)
    if args.format == "csv":
        _dump_csv(args.out, [_result_csv_row(result)])
    elif args.out in (None, "-"):
        _dump_json(None, result.to_json_dict())
    else:
        write_result_json(args.out, result)
    return 0


def _parse_grid(spec: str) -> list[float]:
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError("values", "grid must be start:stop:count or comma list")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 0:
            raise ConfigError("values", "grid count must be >= 0")
        return [float(x) for x in np.linspace(start, stop, count)]
    if not spec:
        return []
    return [float(x) for x in spec.split(",")]


def cmd_sweep(args) -> int:
    try:
        scenario = _scenario_from_args(args)
        values = _parse_grid(args.values)
        if args.param in ("theta1", "theta2", "qwp_angle") and args.degrees:
            values = [float(np.deg2rad(v)) for v in values]
        results = simengine.sweep(scenario, args.param, values)
    except ConfigError as exc:
        return _fail(exc)
    except ValueError as exc:
        return _fail(ConfigError("param", str(exc)))
    if args.format == "json":
        _dump_json(args.out, {"schema_version": SCHEMA_VERSION,
                              "rows": simengine.sweep_rows(args.param, results)})
    else:
        write_sweep_csv(args.out, args.param, results)
    return 0


def cmd_rates(args) -> int:
    try:
        scenario = _scenario_from_args(args)
    except ConfigError as exc:
        return _fail(exc)
    attack_kind = args.attack or scenario.mode
    sysp = scenario.system
    try:
        if attack_kind == "honest":
            report = analysis.honest_rates(sysp)
        elif attack_kind == "intercept_resend":
            report = analysis.intercept_resend_rates()
        elif attack_kind == "quantum":
            p_alert = _fixed_p_alert(scenario) if scenario.fixed_u else None
            report = analysis.quantum_attack_rates(sysp, p_alert=p_alert)
        elif attack_kind == "blinding":
            report = _blinding_report(scenario)
        elif attack_kind == "wavelength_blinding":
            report = analysis.wavelength_blinding_rates(sysp)
        elif attack_kind == "integrated":
            p_alert = _fixed_p_alert(scenario) if scenario.fixed_u else None
            parts = [
                analysis.quantum_attack_rates(sysp, p_alert=p_alert),
                _blinding_report(scenario),
                analysis.wavelength_blinding_rates(sysp),
            ]
            report = analysis.integrated_attack_rates(parts, scenario.attack.weights)
        else:
            raise ConfigError("attack", f"unknown attack kind {attack_kind!r}")
    except ConfigError as exc:
        return _fail(exc)
    except (ValueError, CoverageError) as exc:
        return _fail(ConfigError("attack", str(exc)))
    if args.format == "csv":
        row = {"schema_version": SCHEMA_VERSION}
        row.update({
            k: v for k, v in report.to_json_dict().items()
            if not isinstance(v, (dict, list))
        })
        _dump_csv(args.out, [row])
    else:
        payload = {"schema_version": SCHEMA_VERSION} | report.to_json_dict()
        _dump_json(args.out, payload)
    return 0


def _fixed_p_alert(scenario) -> float:
    from polguard.protocol import faked_state_routing

    u = qmath.JonesUnitary(scenario.randomizer_matrix())
    attack = scenario.attack
    return faked_state_routing(attack.trigger_state, attack.source.phi_e, u).p_alert


def _blinding_report(scenario):
    attack = scenario.attack
    detectors = scenario.detectors or detectors_from_spec(None)
    chosen = [d for d in detectors if d.gate_variant == "gated"] or detectors
    return analysis.blinding_attack_rates(
        scenario.system,
        chosen,
        attack.source.pulse_energy_pj,
        attack.blinding_power_mw,
        perfect_control=attack.perfect_secure_control,
        clamp=attack.clamp_thresholds,
    )


def cmd_audit(args) -> int:
    try:
        if args.builtin:
            detectors = detectors_from_spec(f"builtin:{args.builtin}")
        else:
            if len(args.alert or []) != 2 or len(args.secure or []) != 4:
                raise ConfigError("curves", "audit needs --alert CSV CSV and --secure CSV CSV CSV CSV (or --builtin)")
            detectors = detectors_from_csvs(args.alert, args.secure)
        if args.gate is True:
            detectors = [d for d in detectors if d.gate_variant == "gated"]
        elif args.gate is False:
            detectors = [d for d in detectors if d.gate_variant == "ungated"]
        powers = _parse_grid(args.powers) if args.powers else list(DEFAULT_BLINDING_POWERS)
        verdict = audit_assignment(detectors, powers)
    except ConfigError as exc:
        return _fail(exc)
    except (ValueError, CoverageError) as exc:
        return _fail(ConfigError("curves", str(exc)))

    variants = sorted({p.gate_variant for p in verdict.points})
    payload = {
        "schema_version": SCHEMA_VERSION,
        "secure": verdict.secure,
        "blinding_powers_mw": list(verdict.blinding_powers_mw),
        "variants": {
            v: {
                "secure": verdict.variant_secure(v),
                "points": [
                    {
                        "alert": p.alert_name,
                        "secure": p.secure_name,
                        "blinding_power_mw": p.blinding_power_mw,
                        "power_alert_mw": p.power_alert_mw,
                        "power_secure_mw": p.power_secure_mw,
                        "e_never_alert_pj": p.e_never_alert_pj,
                        "e_never_secure_pj": p.e_never_secure_pj,
                        "ratio": p.ratio,
                        "violates": p.violates,
                        "camouflage": p.camouflage,
                    }
                    for p in verdict.points
                    if p.gate_variant == v
                ],
            }
            for v in variants
        },
    }
    _dump_json(args.out, payload)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([
                "schema_version", "gate_variant", "alert", "secure",
                "blinding_power_mw", "power_alert_mw", "power_secure_mw",
                "e_never_alert_pj", "e_never_secure_pj", "ratio", "violates",
            ])
            for p in verdict.points:
                writer.writerow([
                    SCHEMA_VERSION, p.gate_variant, p.alert_name, p.secure_name,
                    f"{p.blinding_power_mw:.9g}", f"{p.power_alert_mw:.9g}",
                    f"{p.power_secure_mw:.9g}", f"{p.e_never_alert_pj:.9g}",
                    f"{p.e_never_secure_pj:.9g}", f"{p.ratio:.9g}",
                    str(p.violates).lower(),
                ])
    return 0 if verdict.secure else 1


def cmd_pmax(args) -> int:
    try:
        value = qmath.overlap_bounds(args.purity).max
    except ValueError as exc:
        return _fail(ConfigError("purity", str(exc)))
    _dump_json(args.out, {"schema_version": SCHEMA_VERSION,
                          "purity": args.purity, "p_max": value})
    return 0


def cmd_bounds(args) -> int:
    try:
        bounds = qmath.overlap_bounds(args.purity)
    except ValueError as exc:
        return _fail(ConfigError("purity", str(exc)))
    _dump_json(args.out, {"schema_version": SCHEMA_VERSION, "purity": args.purity,
                          "max": bounds.max, "min": bounds.min})
    return 0


def cmd_preset(args) -> int:
    try:
        doc = preset_dict(args.name)
    except ConfigError as exc:
        return _fail(exc)
    _dump_json(args.out, doc)
    return 0


def _add_scenario_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="scenario config JSON")
    p.add_argument("--preset", help="builtin scenario preset name")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--fixed-u", action="store_true", dest="fixed_u",
                   help="hold the randomizer fixed at the validation setting")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="polguard",
        description="Polarization-randomized two-way QKD simulator and "
                    "detector-blinding attack analysis",
    )
    p.add_argument("--version", action="version",
                   version=f"polguard (backend: {backend_name()})")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    _add_scenario_args(s)
    s.add_argument("--out", help="SimResult path (default stdout)")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.set_defaults(fn=cmd_simulate)

    s = sub.add_parser("sweep", help="sweep one named parameter")
    _add_scenario_args(s)
    s.add_argument("--param", required=True, help=f"one of {simengine.SWEEPABLE}")
    s.add_argument("--values", required=True,
                   help="comma list or start:stop:count grid")
    s.add_argument("--degrees", action="store_true",
                   help="interpret angle grids in degrees")
    s.add_argument("--out", required=True, help="sweep table path")
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.set_defaults(fn=cmd_sweep)

    s = sub.add_parser("rates", help="evaluate the analytic rate formulas")
    _add_scenario_args(s)
    s.add_argument("--attack", help="override the attack family to evaluate")
    s.add_argument("--out", help="RatesReport path (default stdout)")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.set_defaults(fn=cmd_rates)

    s = sub.add_parser("audit", help="audit a detector assignment")
    s.add_argument("--alert", nargs="+", help="two alert threshold CSVs")
    s.add_argument("--secure", nargs="+", help="four secure threshold CSVs")
    s.add_argument("--builtin", choices=["correct", "swapped"],
                   help="audit the shipped dataset instead of CSV files")
    s.add_argument("--powers", help="blinding-power grid (comma list or start:stop:count)")
    s.add_argument("--gate", action=argparse.BooleanOptionalAction, default=None,
                   help="audit only the gated (--gate) or ungated (--no-gate) "
                        "variant; default audits both and takes the conjunction")
    s.add_argument("--out", help="verdict JSON path (default stdout)")
    s.add_argument("--csv", help="also write one CSV row per intersection point")
    s.set_defaults(fn=cmd_audit)

    s = sub.add_parser("pmax", help="maximum alert probability for a trigger purity")
    s.add_argument("--purity", type=float, required=True)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_pmax)

    s = sub.add_parser("bounds", help="overlap bounds for a polarization purity")
    s.add_argument("--purity", type=float, required=True)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_bounds)

    s = sub.add_parser("preset", help="print a builtin scenario config")
    s.add_argument("name")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_preset)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
