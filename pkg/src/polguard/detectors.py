"""Single-photon detector models and the detector-assignment security audit.

Two operating regimes are modeled:

* Geiger mode: click probability ``c + 1 - exp(-eta * mu_eff)`` for a pulse
  of ``mu_eff`` mean photons reaching the detector.
* Blinded linear mode: the detector never clicks below a pulse energy
  ``E_never(I)`` and always clicks above ``E_always(I)``, both monotone
  non-decreasing in the received blinding power ``I``; in between the click
  probability is a linear ramp.  Blinded detectors are treated as dark-count
  free.

With total blinding power ``I_B`` entering the receiver unpolarized, an
alert-path detector receives ``I_B/4`` and a secure-path detector ``I_B/8``
(the extra factor of two is the balanced beamsplitting in the secure path).
The audit checks, for every (alert i, secure j, blinding power) combination,
the traceless-attack criterion: the assignment is secure iff

    E_never^bj(I_B/8) / E_never^ai(I_B/4) > 1/2

holds strictly everywhere.  A ratio of exactly 1/2 is classified insecure
(fail-safe).  Threshold data is tabulated per detector in CSV files with
header ``I_mW,E_never_pJ,E_always_pJ,gated``; interpolation between tabulated
powers is monotone piecewise-linear, and evaluation outside the tabulated
domain is an error unless clamping is requested.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from polguard.qmath import overlap_bounds

THRESHOLD_CSV_HEADER = ("I_mW", "E_never_pJ", "E_always_pJ", "gated")

# Fraction of the total input blinding power reaching one detector.
ALERT_BLINDING_SPLIT = 0.25
SECURE_BLINDING_SPLIT = 0.125

# Fig. 2-style grid of total blinding powers (mW) used by default audits.
DEFAULT_BLINDING_POWERS = (
    0.72, 0.78, 0.86, 1.02, 1.09, 1.27, 1.51, 1.78, 2.02, 2.26, 2.5,
)


class CoverageError(ValueError):
    """A threshold curve does not cover a requested blinding power."""

    def __init__(self, label: str, powers: Sequence[float]):
        self.label = label
        self.powers = tuple(powers)
        pretty = ", ".join(f"{p:g}" for p in self.powers)
        super().__init__(f"threshold curve {label!r} does not cover I = {pretty} mW")


@dataclass(frozen=True)
class GeigerParams:
    """Geiger-mode parameters: efficiency per photon, background per gate."""

    efficiency: float
    background: float = 0.0
    gated: bool = True

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must be in [0, 1], got {self.efficiency}")
        if not 0.0 <= self.background < 1.0:
            raise ValueError(f"background must be in [0, 1), got {self.background}")


class ThresholdCurve:
    """Monotone piecewise-linear energy threshold versus blinding power."""

    def __init__(self, powers_mw, energies_pj, label: str = "E(I)"):
        i = np.asarray(powers_mw, dtype=float)
        e = np.asarray(energies_pj, dtype=float)
        if i.ndim != 1 or i.size < 2 or i.shape != e.shape:
            raise ValueError("need matching 1-d arrays with at least two points")
        if not np.all(np.isfinite(i)) or not np.all(np.isfinite(e)):
            raise ValueError("threshold points must be finite")
        if np.any(np.diff(i) <= 0):
            raise ValueError("blinding powers must be strictly increasing")
        if np.any(np.diff(e) < 0):
            raise ValueError("threshold energies must be non-decreasing")
        if np.any(e < 0):
            raise ValueError("threshold energies must be non-negative")
        self.powers = i
        self.energies = e
        self.label = label

    def __call__(self, power_mw, clamp: bool = False):
        p = np.asarray(power_mw, dtype=float)
        lo, hi = self.powers[0], self.powers[-1]
        if clamp:
            p = np.clip(p, lo, hi)
        else:
            bad = (p < lo) | (p > hi)
            if np.any(bad):
                raise CoverageError(self.label, np.atleast_1d(p)[np.atleast_1d(bad)])
        out = np.interp(p, self.powers, self.energies)
        return float(out) if np.isscalar(power_mw) else out

    def covers(self, power_mw: float) -> bool:
        return self.powers[0] <= power_mw <= self.powers[-1]

    def is_compressive(self) -> bool:
        """True when secant slopes are non-increasing (concave profile)."""
        slopes = np.diff(self.energies) / np.diff(self.powers)
        return bool(np.all(np.diff(slopes) <= 1e-12))


@dataclass(frozen=True)
class DetectorModel:
    """One physical detector: Geiger parameters plus blinded-mode thresholds."""

    geiger: GeigerParams
    e_never: ThresholdCurve
    e_always: ThresholdCurve
    label: str  # "alert" or "secure"
    gate_variant: str = "gated"  # "gated" or "ungated"
    name: str = ""

    def __post_init__(self):
        if self.label not in ("alert", "secure"):
            raise ValueError(f"label must be 'alert' or 'secure', got {self.label!r}")
        if self.gate_variant not in ("gated", "ungated"):
            raise ValueError(f"gate_variant must be 'gated' or 'ungated'")
        if not np.array_equal(self.e_never.powers, self.e_always.powers):
            raise ValueError("e_never and e_always must share their power grid")
        if np.any(self.e_always.energies < self.e_never.energies):
            raise ValueError("e_always must dominate e_never at every tabulated power")

    @property
    def blinding_split(self) -> float:
        return ALERT_BLINDING_SPLIT if self.label == "alert" else SECURE_BLINDING_SPLIT


def geiger_click_probability(params: GeigerParams, mean_energy: float) -> float:
    """Click probability for a Geiger-mode detector seeing mu_eff mean photons."""
    if mean_energy < 0:
        raise ValueError(f"mean photon number must be >= 0, got {mean_energy}")
    p = params.background + 1.0 - np.exp(-params.efficiency * mean_energy)
    return float(min(max(p, 0.0), 1.0))


def ramp_click_probability(energy_pj: float, e_never: float, e_always: float) -> float:
    """Ramp-step click law of a blinded detector: 0 below, 1 at/above, linear between."""
    if energy_pj < e_never:
        return 0.0
    if energy_pj >= e_always:
        return 1.0
    return (energy_pj - e_never) / (e_always - e_never)


def blinded_click_probability(
    model: DetectorModel, pulse_energy: float, blinding_power: float, clamp: bool = False
) -> float:
    """Click probability of a blinded detector for a trigger pulse.

    ``blinding_power`` is the power received by this detector (already split),
    in mW; ``pulse_energy`` in pJ.  Out-of-domain powers raise CoverageError
    unless ``clamp`` is set.
    """
    if pulse_energy < 0:
        raise ValueError("pulse energy must be >= 0")
    lo = model.e_never(blinding_power, clamp=clamp)
    hi = model.e_always(blinding_power, clamp=clamp)
    return ramp_click_probability(pulse_energy, lo, hi)


def p_max_trigger(purity_t: float) -> float:
    """Largest alert-path routing probability achievable by a trigger of given purity."""
    return overlap_bounds(purity_t).max


class ConditionsAB(NamedTuple):
    A_holds: bool
    B_holds: bool


def _split_set(detectors: Sequence[DetectorModel]) -> tuple[list, list]:
    alert = [d for d in detectors if d.label == "alert"]
    secure = [d for d in detectors if d.label == "secure"]
    if len(alert) != 2 or len(secure) != 4:
        raise ValueError(
            f"expected 2 alert + 4 secure detectors, got {len(alert)} + {len(secure)}"
        )
    return alert, secure


def check_conditions_AB(
    detectors: Sequence[DetectorModel],
    pulse_energy: float,
    purity_t: float,
    blinding_power: float,
) -> ConditionsAB:
    """Evaluate the two traceless detector-control requirements.

    (A) the largest trigger energy that can reach an alert detector stays
    below the smallest alert ``E_never`` at its received blinding power;
    (B) the largest energy that can reach a secure detector exceeds the
    smallest secure ``E_never``.  An attack is unnoticeable only when both
    hold; the receiver is safe when no pulse energy satisfies both.
    """
    alert, secure = _split_set(detectors)
    pmax = p_max_trigger(purity_t)
    min_never_alert = min(
        d.e_never(blinding_power * ALERT_BLINDING_SPLIT) for d in alert
    )
    min_never_secure = min(
        d.e_never(blinding_power * SECURE_BLINDING_SPLIT) for d in secure
    )
    a_holds = 0.5 * pmax * pulse_energy < min_never_alert
    b_holds = 0.25 * pmax * pulse_energy > min_never_secure
    return ConditionsAB(bool(a_holds), bool(b_holds))


def unnoticeable_attack_possible(
    detectors: Sequence[DetectorModel], blinding_power: float
) -> bool:
    """True iff some trigger energy satisfies (A) and (B) simultaneously.

    Equivalent to min_j E_never^bj(I_B/8) / min_i E_never^ai(I_B/4) < 1/2.
    """
    alert, secure = _split_set(detectors)
    min_never_alert = min(
        d.e_never(blinding_power * ALERT_BLINDING_SPLIT) for d in alert
    )
    min_never_secure = min(
        d.e_never(blinding_power * SECURE_BLINDING_SPLIT) for d in secure
    )
    return 2.0 * min_never_secure < min_never_alert


@dataclass(frozen=True)
class AuditPoint:
    """One (alert detector, secure detector, blinding power) intersection."""

    gate_variant: str
    alert_name: str
    secure_name: str
    blinding_power_mw: float
    power_alert_mw: float
    power_secure_mw: float
    e_never_alert_pj: float
    e_never_secure_pj: float
    ratio: float
    violates: bool

    @property
    def camouflage(self) -> dict:
        """Open quadrant {E_alert < x_max, E_secure > y_min} of traceless triggers."""
        return {"x_max": self.e_never_alert_pj, "y_min": self.e_never_secure_pj}


@dataclass(frozen=True)
class AuditVerdict:
    secure: bool
    points: tuple[AuditPoint, ...]
    blinding_powers_mw: tuple[float, ...]

    @property
    def violations(self) -> tuple[AuditPoint, ...]:
        return tuple(p for p in self.points if p.violates)

    def variant_secure(self, gate_variant: str) -> bool:
        pts = [p for p in self.points if p.gate_variant == gate_variant]
        if not pts:
            raise ValueError(f"no audit points for variant {gate_variant!r}")
        return not any(p.violates for p in pts)


def audit_assignment(
    detectors: Sequence[DetectorModel],
    blinding_powers: Iterable[float] = DEFAULT_BLINDING_POWERS,
) -> AuditVerdict:
    """Audit a detector assignment over a grid of total blinding powers.

    ``detectors`` may mix gate variants; each variant present is audited as
    its own 2-alert + 4-secure set and the verdict is the conjunction over
    variants.  The assignment is secure iff every intersection point keeps
    the secure/alert ``E_never`` ratio strictly above 1/2, i.e. every
    camouflage quadrant stays clear of the enforced 1:2 operational-ratio
    line ``E_secure = E_alert / 2``.
    """
    powers = tuple(float(p) for p in blinding_powers)
    variants = sorted({d.gate_variant for d in detectors})
    points = []
    for variant in variants:
        subset = [d for d in detectors if d.gate_variant == variant]
        alert, secure = _split_set(subset)
        for d in subset:
            for i_b in powers:
                if not d.e_never.covers(i_b * d.blinding_split):
                    raise CoverageError(
                        d.e_never.label, [i_b * d.blinding_split]
                    )
        for da in alert:
            for db in secure:
                for i_b in powers:
                    ia = i_b * ALERT_BLINDING_SPLIT
                    ib = i_b * SECURE_BLINDING_SPLIT
                    ea = da.e_never(ia)
                    eb = db.e_never(ib)
                    ratio = eb / ea
                    points.append(
                        AuditPoint(
                            gate_variant=variant,
                            alert_name=da.name or "alert",
                            secure_name=db.name or "secure",
                            blinding_power_mw=i_b,
                            power_alert_mw=ia,
                            power_secure_mw=ib,
                            e_never_alert_pj=ea,
                            e_never_secure_pj=eb,
                            ratio=ratio,
                            violates=ratio <= 0.5,
                        )
                    )
    verdict = not any(p.violates for p in points)
    return AuditVerdict(secure=verdict, points=tuple(points), blinding_powers_mw=powers)


def load_threshold_csv(path, name: str = "") -> dict[str, tuple[ThresholdCurve, ThresholdCurve]]:
    """Load one detector's threshold tables.

    Returns ``{gate_variant: (e_never, e_always)}`` for the variants present.
    Raises ValueError naming the offending row on schema or monotonicity
    violations.
    """
    rows = {"gated": [], "ungated": []}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != THRESHOLD_CSV_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(THRESHOLD_CSV_HEADER)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
            try:
                i_mw = float(row[0])
                e_never = float(row[1])
                e_always = float(row[2])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric value ({exc})") from None
            flag = row[3].strip().lower()
            if flag in ("true", "1", "yes"):
                variant = "gated"
            elif flag in ("false", "0", "no"):
                variant = "ungated"
            else:
                raise ValueError(f"{path}:{lineno}: gated flag must be boolean, got {row[3]!r}")
            rows[variant].append((i_mw, e_never, e_always))
    label = name or str(path)
    out = {}
    for variant, data in rows.items():
        if not data:
            continue
        data.sort()
        i = [r[0] for r in data]
        never = [r[1] for r in data]
        always = [r[2] for r in data]
        try:
            out[variant] = (
                ThresholdCurve(i, never, label=f"{label}:{variant}:E_never"),
                ThresholdCurve(i, always, label=f"{label}:{variant}:E_always"),
            )
        except ValueError as exc:
            raise ValueError(f"{path} ({variant}): {exc}") from None
    if not out:
        raise ValueError(f"{path}: no threshold rows found")
    return out


def save_threshold_csv(path, tables: dict[str, tuple[ThresholdCurve, ThresholdCurve]]):
    """Write per-detector threshold tables in the documented CSV schema."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(THRESHOLD_CSV_HEADER)
        for variant in ("gated", "ungated"):
            if variant not in tables:
                continue
            never, always = tables[variant]
            flag = "true" if variant == "gated" else "false"
            for i, lo, hi in zip(never.powers, never.energies, always.energies):
                writer.writerow([f"{i:.9g}", f"{lo:.9g}", f"{hi:.9g}", flag])
