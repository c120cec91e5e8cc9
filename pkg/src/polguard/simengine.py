"""Seeded Monte Carlo harness over the round kernels.

Random-stream discipline: a scenario's 64-bit seed keys a counter-based
Philox bit generator; worker ``w`` of ``W`` uses the stream
``Philox(key=seed).jumped(w)`` and simulates a contiguous block of rounds.
Every round consumes a fixed number of draws (see ``_kernels_py``), so
results are bit-identical for identical (seed, workers, backend) and the
worker count only re-partitions statistically equivalent streams.

Rate normalization follows ``analysis``: sifted rate and QBER are per
round; the alert rate of the quantum and blinding families is per
forwarded/trigger pulse (``alert_normalizer`` records which).
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from polguard import _backend, _kernels_py as kl, adversary, qmath
from polguard.adversary import AttackConfig, outcome_probabilities
from polguard.analysis import RatesReport, SystemParams, integrated_attack_rates
from polguard.detectors import DetectorModel
from polguard.protocol import faked_state_routing

SCHEMA_VERSION = 1

MODE_IDS = {
    "honest": kl.MODE_HONEST,
    "intercept_resend": kl.MODE_INTERCEPT,
    "quantum": kl.MODE_QUANTUM,
    "blinding": kl.MODE_BLINDING,
    "wavelength_blinding": kl.MODE_WAVELENGTH,
    "integrated": kl.MODE_INTEGRATED,
}

# alert-rate denominators per mode (see module docstring)
ALERT_NORMALIZERS = {
    "honest": "rounds",
    "intercept_resend": "rounds",
    "quantum": "triggers",
    "blinding": "triggers",
    "wavelength_blinding": "rounds",
    "integrated": "mixed",
}

DETECTOR_KEYS = ("a1", "a2", "b1", "b2", "b3", "b4")


@dataclass(frozen=True)
class Scenario:
    """One simulation request: mode, parameters, rounds, seed, workers."""

    mode: str
    system: SystemParams
    attack: Optional[AttackConfig] = None
    detectors: Optional[Sequence[DetectorModel]] = None  # blinding thresholds
    rounds: int = 100_000
    seed: int = 0
    workers: int = 1
    fixed_u: bool = False
    fixed_u_matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mode not in MODE_IDS:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {sorted(MODE_IDS)}")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.mode != "honest" and self.attack is None:
            raise ValueError(f"mode {self.mode!r} requires an attack config")
        needs_thresholds = self.mode in ("blinding", "integrated")
        if needs_thresholds and not self.detectors:
            raise ValueError(f"mode {self.mode!r} requires detector threshold models")

    def randomizer_matrix(self) -> np.ndarray:
        if self.fixed_u_matrix is not None:
            return np.asarray(self.fixed_u_matrix, dtype=complex)
        return qmath.bob_fixed_randomizer().matrix


@dataclass(frozen=True)
class FamilyTally:
    """Raw integer tallies of one attack family (or of a plain-mode run)."""

    rounds: int
    triggers: int
    alert_sum: int
    alert_sqsum: int
    sifted: int
    errors: int
    key_clicks: int
    double_same: int
    double_cross: int
    detector_clicks: tuple[int, ...]
    alert_rounds: int
    arrivals_alert: int
    arrivals_secure: int

    @classmethod
    def from_row(cls, row: np.ndarray) -> "FamilyTally":
        return cls(
            rounds=int(row[kl.T_ROUNDS]),
            triggers=int(row[kl.T_TRIGGERS]),
            alert_sum=int(row[kl.T_ALERT]),
            alert_sqsum=int(row[kl.T_ALERT2]),
            sifted=int(row[kl.T_SIFTED]),
            errors=int(row[kl.T_ERRORS]),
            key_clicks=int(row[kl.T_KEY]),
            double_same=int(row[kl.T_DBLSAME]),
            double_cross=int(row[kl.T_DBLCROSS]),
            detector_clicks=tuple(int(x) for x in row[kl.T_DET:kl.T_DET + 6]),
            alert_rounds=int(row[kl.T_ALERTRND]),
            arrivals_alert=int(row[kl.T_ARR_A]),
            arrivals_secure=int(row[kl.T_ARR_B]),
        )

    def rates(self, attack: str, alert_normalizer: str) -> RatesReport:
        n_alert = self.triggers if alert_normalizer == "triggers" else self.rounds
        alert, alert_se = _mean_se(self.alert_sum, self.alert_sqsum, n_alert)
        sifted, sifted_se = _binomial(self.sifted, self.rounds)
        qber, qber_se = _binomial(self.errors, self.sifted)
        return RatesReport(
            attack=attack,
            alert_rate=alert,
            sifted_rate=sifted,
            qber=qber,
            provenance="monte_carlo",
            alert_se=alert_se,
            sifted_se=sifted_se,
            qber_se=qber_se,
            diagnostics={"alert_normalizer": alert_normalizer},
        )


def _mean_se(total: int, sqtotal: int, n: int) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 0.0
    mean = total / n
    var = max(sqtotal / n - mean * mean, 0.0)
    return mean, float(np.sqrt(var / n))


def _binomial(k: int, n: int) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 0.0
    p = k / n
    return p, float(np.sqrt(max(p * (1.0 - p), 0.0) / n))


@dataclass(frozen=True)
class SimResult:
    """Empirical rates with standard errors plus the raw tallies."""

    mode: str
    rounds: int
    seed: int
    workers: int
    backend: str
    report: RatesReport
    tallies: tuple[FamilyTally, ...]
    family_reports: tuple[RatesReport, ...] = ()
    wall_time_s: float = 0.0

    def equivalent(self, other: "SimResult") -> bool:
        """Equality ignoring wall time (the determinism contract)."""
        return (
            self.mode == other.mode
            and self.rounds == other.rounds
            and self.seed == other.seed
            and self.workers == other.workers
            and self.backend == other.backend
            and self.tallies == other.tallies
            and self.report == other.report
            and self.family_reports == other.family_reports
        )

    @property
    def detector_clicks(self) -> dict:
        total = np.zeros(6, dtype=np.int64)
        for t in self.tallies:
            total += np.array(t.detector_clicks)
        return dict(zip(DETECTOR_KEYS, (int(x) for x in total)))

    def to_json_dict(self, include_timing: bool = True) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "mode": self.mode,
            "rounds": self.rounds,
            "seed": self.seed,
            "workers": self.workers,
            "backend": self.backend,
            "alert_rate": self.report.alert_rate,
            "alert_se": self.report.alert_se,
            "sifted_rate": self.report.sifted_rate,
            "sifted_se": self.report.sifted_se,
            "qber": self.report.qber,
            "qber_se": self.report.qber_se,
            "alert_normalizer": self.report.diagnostics.get("alert_normalizer"),
            "detector_clicks": self.detector_clicks,
            "tallies": [t.__dict__ | {"detector_clicks": list(t.detector_clicks)}
                        for t in self.tallies],
        }
        if self.family_reports:
            out["family_reports"] = [r.to_json_dict() for r in self.family_reports]
        if include_timing:
            out["wall_time_s"] = self.wall_time_s
        return out


def _trigger_eigensystem(attack: AttackConfig) -> tuple[float, np.ndarray]:
    """(largest eigenvalue, its eigenvector) of the trigger polarization."""
    rho = attack.trigger_state.rho
    vals, vecs = np.linalg.eigh(rho)
    return float(vals[-1]), vecs[:, -1]


def build_kernel_params(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Flatten a scenario into the kernel parameter vector and threshold knots."""
    p = np.zeros(kl.PARAM_SIZE)
    sysp = scenario.system
    p[kl.P_RSW] = sysp.switch_rate
    p[kl.P_FID] = sysp.fidelity
    p[kl.P_MU_SRC] = sysp.source_mu * sysp.transmittance
    p[kl.P_ETA:kl.P_ETA + 6] = sysp.eta
    p[kl.P_BG:kl.P_BG + 6] = sysp.background
    p[kl.P_PA_FIXED] = -1.0
    p[kl.P_RA_FIXED] = 0.5  # irrelevant unless blinding light is polarized

    knots = np.zeros((6, 3, 2))
    knots[:, 0, 1] = 1.0  # degenerate but valid grid for modes without thresholds

    attack = scenario.attack
    if attack is not None:
        p[kl.P_MU_E] = attack.resend_mu
        p_c, p_w, p_nc = outcome_probabilities(attack.measurement)
        p[kl.P_EVE_C], p[kl.P_EVE_W], p[kl.P_EVE_NC] = p_c, p_w, p_nc
        p[kl.P_ET] = attack.source.pulse_energy_pj
        p[kl.P_IB] = attack.blinding_power_mw
        p[kl.P_PERFECT] = 1.0 if attack.perfect_secure_control else 0.0
        p[kl.P_WQ], p[kl.P_WBL], p[kl.P_WWL] = attack.weights

        lam, vec = _trigger_eigensystem(attack)
        p[kl.P_LAM_T] = lam
        p[kl.P_VT:kl.P_VT + 4] = [vec[0].real, vec[0].imag, vec[1].real, vec[1].imag]
        lam_b = qmath.overlap_bounds(attack.blinding_purity).max
        vec_b = qmath.KET_V
        p[kl.P_LAM_B] = lam_b
        p[kl.P_VB:kl.P_VB + 4] = [vec_b[0].real, vec_b[0].imag, vec_b[1].real, vec_b[1].imag]
        if attack.blinding_purity > 0.5:
            p[kl.P_RA_FIXED] = -1.0

        if scenario.fixed_u:
            u = qmath.JonesUnitary(scenario.randomizer_matrix())
            routing = faked_state_routing(attack.trigger_state, attack.source.phi_e, u)
            p[kl.P_PA_FIXED] = routing.p_alert
            r = qmath.conjugate_state(u, attack.blinding_state).rho[0, 0].real
            p[kl.P_RA_FIXED] = float(min(max(r, 0.0), 1.0))

        if scenario.detectors is not None:
            knots = _threshold_knots(scenario)
    return p, knots


def _threshold_knots(scenario: Scenario) -> np.ndarray:
    """Per-detector (power, E_never, E_always) tables, padded to equal length.

    Unless the attack opts into clamping, the received-power range implied by
    the blinding purity must be covered by every curve.
    """
    detectors = list(scenario.detectors)
    chosen = [d for d in detectors if d.gate_variant == "gated"] or detectors
    alert = [d for d in chosen if d.label == "alert"]
    secure = [d for d in chosen if d.label == "secure"]
    if len(alert) != 2 or len(secure) != 4:
        raise ValueError("blinding simulation needs 2 alert + 4 secure detectors")
    ordered = alert + secure

    attack = scenario.attack
    hi_r, lo_r = qmath.overlap_bounds(attack.blinding_purity)
    i_b = attack.blinding_power_mw
    if not attack.clamp_thresholds:
        for d in ordered:
            split = 0.5 if d.label == "alert" else 0.25
            for r in (lo_r, hi_r):
                power = split * r * i_b
                if not d.e_never.covers(power):
                    raise ValueError(
                        f"threshold curve {d.e_never.label!r} does not cover "
                        f"{power:g} mW; tabulate more points or set clamp_thresholds"
                    )
    k = max(d.e_never.powers.size for d in ordered)
    knots = np.zeros((6, 3, k))
    for idx, d in enumerate(ordered):
        n = d.e_never.powers.size
        knots[idx, 0, :n] = d.e_never.powers
        knots[idx, 1, :n] = d.e_never.energies
        knots[idx, 2, :n] = d.e_always.energies
        if n < k:  # pad by repeating the last point; interp clamps there anyway
            knots[idx, 0, n:] = d.e_never.powers[-1] + np.arange(1, k - n + 1)
            knots[idx, 1, n:] = d.e_never.energies[-1]
            knots[idx, 2, n:] = d.e_always.energies[-1]
    return knots


def _worker_counts(rounds: int, workers: int) -> list[int]:
    base, rem = divmod(rounds, workers)
    return [base + (1 if w < rem else 0) for w in range(workers)]


def run(scenario: Scenario) -> SimResult:
    """Execute a scenario; deterministic for fixed (seed, workers, backend)."""
    t0 = time.perf_counter()
    mode = MODE_IDS[scenario.mode]
    params, knots = build_kernel_params(scenario)
    counts = _worker_counts(scenario.rounds, scenario.workers)

    def one(worker: int) -> np.ndarray:
        bitgen = np.random.Philox(key=scenario.seed).jumped(worker)
        return _backend.run_rounds(mode, counts[worker], bitgen, params, knots)

    if scenario.workers == 1:
        totals = one(0)
    else:
        with ThreadPoolExecutor(max_workers=scenario.workers) as pool:
            totals = sum(pool.map(one, range(scenario.workers)))

    tallies = tuple(FamilyTally.from_row(totals[r]) for r in range(3))
    if scenario.mode == "integrated":
        family_reports = (
            tallies[0].rates("quantum", "triggers"),
            tallies[1].rates("blinding", "triggers"),
            tallies[2].rates("wavelength_blinding", "rounds"),
        )
        report = integrated_attack_rates(family_reports, scenario.attack.weights)
        kept = tallies
    else:
        family_reports = ()
        report = tallies[0].rates(scenario.mode, ALERT_NORMALIZERS[scenario.mode])
        kept = (tallies[0],)
    return SimResult(
        mode=scenario.mode,
        rounds=scenario.rounds,
        seed=scenario.seed,
        workers=scenario.workers,
        backend=_backend.backend_name(),
        report=report,
        tallies=kept,
        family_reports=family_reports,
        wall_time_s=time.perf_counter() - t0,
    )


SWEEPABLE = (
    "theta1", "theta2", "qwp_angle", "purity", "pulse_energy_pj",
    "blinding_power_mw", "switch_rate", "mu", "mu_e", "fidelity",
    "eve_efficiency", "eve_fidelity",
)


def _apply_parameter(scenario: Scenario, name: str, value: float) -> Scenario:
    if name not in SWEEPABLE:
        raise ValueError(f"unknown sweep parameter {name!r}; choose from {SWEEPABLE}")
    attack = scenario.attack
    system = scenario.system
    if name in ("theta1", "theta2", "qwp_angle", "pulse_energy_pj"):
        if attack is None:
            raise ValueError(f"parameter {name!r} needs an attack config")
        attack = replace(attack, source=replace(attack.source, **{name: value}))
    elif name == "purity":
        if attack is None:
            raise ValueError("parameter 'purity' needs an attack config")
        attack = attack.with_purity(value)
        system = replace(system, trigger_purity=value)
    elif name == "blinding_power_mw":
        attack = replace(attack, blinding_power_mw=value)
    elif name == "mu_e":
        attack = replace(attack, resend_mu=value)
        system = replace(system, resend_mu=value)
    elif name == "switch_rate":
        system = replace(system, switch_rate=value)
    elif name == "mu":
        system = replace(system, source_mu=value)
        if attack is not None:
            attack = replace(attack, measurement=replace(attack.measurement, mu=value))
    elif name == "fidelity":
        system = replace(system, fidelity=value)
    elif name == "eve_efficiency":
        attack = replace(attack, measurement=replace(attack.measurement, efficiency=value))
        system = replace(system, eve=replace(system.eve, efficiency=value))
    elif name == "eve_fidelity":
        attack = replace(attack, measurement=replace(attack.measurement, fidelity=value))
        system = replace(system, eve=replace(system.eve, fidelity=value))
    return replace(scenario, attack=attack, system=system)


def trigger_energies_at(scenario: Scenario) -> tuple[float, float]:
    """Deterministic gated trigger energies (alert, secure) for fixed-U runs."""
    attack = scenario.attack
    if attack is None or not scenario.fixed_u:
        return float("nan"), float("nan")
    u = qmath.JonesUnitary(scenario.randomizer_matrix())
    routing = faked_state_routing(attack.trigger_state, attack.source.phi_e, u)
    e_t = attack.source.pulse_energy_pj
    return 0.5 * routing.p_alert * e_t, 0.25 * routing.p_secure * e_t


def sweep(scenario: Scenario, parameter: str, values: Sequence[float]):
    """One SimResult per grid value of the named parameter."""
    results = []
    for v in values:
        sc = _apply_parameter(scenario, parameter, float(v))
        results.append((float(v), run(sc), trigger_energies_at(sc)))
    return results


SWEEP_CSV_COLUMNS = (
    "schema_version", "parameter", "value",
    "alert_rate", "alert_se", "sifted_rate", "sifted_se", "qber", "qber_se",
    "clicks_a1", "clicks_a2", "clicks_b1", "clicks_b2", "clicks_b3", "clicks_b4",
    "e_alert_pj", "e_secure_pj",
)


def sweep_rows(parameter: str, results) -> list[dict]:
    rows = []
    for value, res, energies in results:
        clicks = res.detector_clicks
        row = {
            "schema_version": SCHEMA_VERSION,
            "parameter": parameter,
            "value": value,
            "alert_rate": res.report.alert_rate,
            "alert_se": res.report.alert_se,
            "sifted_rate": res.report.sifted_rate,
            "sifted_se": res.report.sifted_se,
            "qber": res.report.qber,
            "qber_se": res.report.qber_se,
        }
        row.update({f"clicks_{k}": clicks[k] for k in DETECTOR_KEYS})
        row["e_alert_pj"] = energies[0]
        row["e_secure_pj"] = energies[1]
        rows.append(row)
    return rows


def write_sweep_csv(path, parameter: str, results):
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_CSV_COLUMNS)
        writer.writeheader()
        for row in sweep_rows(parameter, results):
            writer.writerow({
                k: ("" if isinstance(v, float) and np.isnan(v)
                    else f"{v:.9g}" if isinstance(v, float) else v)
                for k, v in row.items()
            })


def write_result_json(path, result: SimResult, include_timing: bool = True):
    with open(path, "w") as fh:
        json.dump(_round_floats(result.to_json_dict(include_timing)), fh, indent=2)
        fh.write("\n")


def _round_floats(obj):
    """Limit float output to 9 significant digits across nested structures."""
    if isinstance(obj, float):
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj
