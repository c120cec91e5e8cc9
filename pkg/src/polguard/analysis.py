"""Closed-form alert/key/QBER rates for every attack family.

Rate normalization conventions (shared with ``simengine``):

* Sifted key rate and QBER are always per protocol round.
* The alert and raw trigger rates of the quantum and blinding attacks are
  per forwarded/trigger pulse: Eve resends only on conclusive measurement
  outcomes, and the closed forms below carry no duty-cycle factor for the
  bright-pulse statistics (the sifted rate does, via P_correct + P_wrong).
* Honest, intercept-resend and wavelength-blinding alert rates are per
  round.

Quantum attack composition, for Alice phase index k (detector b_{j} is
matched to phase j per ``protocol``): the raw click probability of a secure
detector is ``c + 1 - exp(-mu_e p_b frac eta / 4)`` where ``frac`` is F for
the matched detector, 1-F for its partner, 1/2 in the conjugate basis, and
the 1/4 collects the gated-window and arm-splitting factors.  Squashing
keeps single-basis events (same-basis doubles give a random bit), and the
per-round sifted rate averages the four Alice phases with Eve's outcome
distribution; the inconclusive remainder contributes background-only terms.
The alert rate uses the unsquashed two-term click law in which both alert
detectors carry the matched-basis fidelity factor; the physically split
alternative (fidelity F to one detector, 1-F to the other) is available in
``protocol.bob_measurement`` and differs at order (1-F).

Blinding attack, ramp-step click law averaged over the uniformly
distributed alert probability p_a of a pure trigger polarization:

    R_alert_i  = max(1 - (E_never_i + E_always_i)/E_T, 0) / 2
    R_secure_j = max(1 - 2 (E_never_j + E_always_j)/E_T, 0)

valid for trigger energies at or above twice (alert) / four times (secure)
the E_always of the receiving detector; a diagnostics flag records when the
requested energy leaves that regime.  Path switching at rate R_sw exchanges
alert and secure tallies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from polguard import adversary, qmath
from polguard.adversary import EveMeasurementParams, outcome_probabilities
from polguard.detectors import (
    ALERT_BLINDING_SPLIT,
    SECURE_BLINDING_SPLIT,
    DetectorModel,
    GeigerParams,
)

GL_NODES = 64  # Gauss-Legendre order for averaging over the routing probability


@dataclass(frozen=True)
class SystemParams:
    """Receiver and adversary parameters entering the rate formulas."""

    alert_geiger: tuple[GeigerParams, GeigerParams]
    secure_geiger: tuple[GeigerParams, GeigerParams, GeigerParams, GeigerParams]
    fidelity: float = 0.98
    eve: EveMeasurementParams = field(default_factory=EveMeasurementParams)
    resend_mu: float = 1.0
    switch_rate: float = 0.0
    source_mu: float = 0.5
    transmittance: float = 1.0
    trigger_purity: float = 1.0
    decoy_states: bool = False  # protocol flag; no effect on modeled rates

    def __post_init__(self):
        if len(self.alert_geiger) != 2 or len(self.secure_geiger) != 4:
            raise ValueError("need 2 alert and 4 secure detectors")
        if not 0.5 <= self.fidelity <= 1.0:
            raise ValueError("fidelity must lie in [1/2, 1]")
        if not 0.0 <= self.switch_rate <= 1.0:
            raise ValueError("switch rate must lie in [0, 1]")
        if self.resend_mu < 0 or self.source_mu < 0:
            raise ValueError("mean photon numbers must be >= 0")
        if not 0.0 <= self.transmittance <= 1.0:
            raise ValueError("transmittance must lie in [0, 1]")
        if not 0.5 <= self.trigger_purity <= 1.0:
            raise ValueError("trigger purity must lie in [1/2, 1]")

    @property
    def eta(self) -> np.ndarray:
        return np.array(
            [g.efficiency for g in self.alert_geiger + self.secure_geiger]
        )

    @property
    def background(self) -> np.ndarray:
        return np.array(
            [g.background for g in self.alert_geiger + self.secure_geiger]
        )


@dataclass(frozen=True)
class RatesReport:
    """Alert rate, sifted key rate and QBER with their provenance."""

    attack: str
    alert_rate: float
    sifted_rate: float
    qber: float
    provenance: str = "analytic"
    alert_se: Optional[float] = None
    sifted_se: Optional[float] = None
    qber_se: Optional[float] = None
    detector_click_probs: Optional[tuple[float, ...]] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in ("analytic", "monte_carlo"):
            raise ValueError("provenance must be 'analytic' or 'monte_carlo'")
        for name in ("alert_rate", "sifted_rate", "qber"):
            if getattr(self, name) < -1e-12:
                raise ValueError(f"{name} must be non-negative")
        if not -1e-12 <= self.qber <= 1.0 + 1e-12:
            raise ValueError("qber must lie in [0, 1]")

    def to_json_dict(self) -> dict:
        out = {
            "attack": self.attack,
            "provenance": self.provenance,
            "alert_rate": self.alert_rate,
            "sifted_rate": self.sifted_rate,
            "qber": self.qber,
        }
        for name in ("alert_se", "sifted_se", "qber_se"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        if self.detector_click_probs is not None:
            out["detector_click_probs"] = list(self.detector_click_probs)
        if self.diagnostics:
            out["diagnostics"] = self.diagnostics
        return out


# phase index helpers: k in 0..3 <-> phases (0, pi, pi/2, 3pi/2)
def _partner(k: int) -> int:
    return k ^ 1


def _phase_fraction(j: int, k: int, fidelity: float) -> float:
    """Energy fraction of secure detector j for a pulse with phase index k."""
    if (j >> 1) != (k >> 1):
        return 0.5
    return fidelity if j == k else 1.0 - fidelity


def raw_click_probs(params: SystemParams, p_b: float, k: int) -> tuple[float, ...]:
    """Raw per-detector click probabilities (a1, a2, b1..b4) for Eve phase k.

    Secure detectors follow the exponential click law with the deterministic
    1/4 energy split; alert detectors use the two-term gated law with the
    alert-path share p_a = 1 - p_b.
    """
    if not 0.0 <= p_b <= 1.0:
        raise ValueError("p_b must lie in [0, 1]")
    mu, f = params.resend_mu, params.fidelity
    p_a = 1.0 - p_b
    out = []
    for g in params.alert_geiger:
        p = g.background + 1.0 - 0.5 * (
            np.exp(-mu * p_a * f * g.efficiency / 2.0)
            + np.exp(-mu * p_a * g.efficiency / 4.0)
        )
        out.append(float(min(max(p, 0.0), 1.0)))
    for j, g in enumerate(params.secure_geiger):
        frac = _phase_fraction(j, k, f)
        p = g.background + 1.0 - np.exp(-mu * p_b * frac * g.efficiency / 4.0)
        out.append(float(min(max(p, 0.0), 1.0)))
    return tuple(out)


def _squashed_single(p: Sequence[float], j: int) -> float:
    """P(squashed click registered on secure detector j) given raw probs p[0..3]."""
    partner = p[_partner(j)]
    others = [p[m] for m in range(4) if (m >> 1) != (j >> 1)]
    return p[j] * (1.0 - 0.5 * partner) * (1.0 - others[0]) * (1.0 - others[1])


def _squashed_basis(p: Sequence[float], basis: int) -> float:
    """P(squashed click lands in the given basis) given raw probs p[0..3]."""
    j0, j1 = (0, 1) if basis == 0 else (2, 3)
    k0, k1 = (2, 3) if basis == 0 else (0, 1)
    return (p[j0] + p[j1] - p[j0] * p[j1]) * (1.0 - p[k0]) * (1.0 - p[k1])


def _quantum_round_terms(params: SystemParams, p_a: float) -> tuple[float, float, float]:
    """(sifted, errors, alert) per round/trigger at a fixed routing probability."""
    p_c, p_w, p_nc = outcome_probabilities(params.eve)
    p_rest = 1.0 - p_c - p_w - 2.0 * p_nc
    p_b = 1.0 - p_a
    c = params.background

    raw = [raw_click_probs(params, p_b, k)[2:] for k in range(4)]
    sifted = 0.0
    errors = 0.0
    for k_a in range(4):
        basis = k_a >> 1
        wrong = _partner(k_a)
        nc0, nc1 = ((2, 3) if basis == 0 else (0, 1))
        cb_corr = c[2 + k_a]
        cb_wrong = c[2 + wrong]
        bg_basis = c[2 + 2 * basis] + c[3 + 2 * basis] - c[2 + 2 * basis] * c[3 + 2 * basis]
        r_k = (
            p_c * _squashed_basis(raw[k_a], basis)
            + p_w * _squashed_basis(raw[wrong], basis)
            + p_nc * (_squashed_basis(raw[nc0], basis) + _squashed_basis(raw[nc1], basis))
            + p_rest * bg_basis
        )
        e_k = (
            p_c * _squashed_single(raw[k_a], wrong)
            + p_w * _squashed_single(raw[wrong], wrong)
            + p_nc * (_squashed_single(raw[nc0], wrong) + _squashed_single(raw[nc1], wrong))
            + p_rest * (cb_wrong - cb_corr * cb_wrong / 2.0)
        )
        sifted += 0.25 * r_k
        errors += 0.25 * e_k

    mu, f = params.resend_mu, params.fidelity
    alert = 0.0
    for g in params.alert_geiger:
        alert += g.background + 1.0 - 0.5 * (
            np.exp(-mu * p_a * f * g.efficiency / 2.0)
            + np.exp(-mu * p_a * g.efficiency / 4.0)
        )
    return sifted, errors, alert


def _routing_average(params: SystemParams, fn, p_alert: Optional[float]):
    """Average fn(p_a) over the Haar routing distribution (uniform on the
    overlap interval set by the trigger purity), or evaluate at a fixed p_a."""
    if p_alert is not None:
        return np.asarray(fn(float(p_alert)))
    hi, lo = qmath.overlap_bounds(params.trigger_purity)
    if hi - lo < 1e-15:
        return np.asarray(fn(0.5))
    nodes, weights = np.polynomial.legendre.leggauss(GL_NODES)
    acc = 0.0
    for x, w in zip(nodes, weights):
        p = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x
        acc = acc + 0.5 * w * np.asarray(fn(p))
    return acc


def quantum_attack_rates(
    params: SystemParams, p_alert: Optional[float] = None
) -> RatesReport:
    """Sifted rate, QBER (per round) and alert rate (per trigger).

    With ``p_alert=None`` the rates are averaged over the Haar-induced
    routing distribution of the trigger polarization; otherwise they are
    evaluated at the given fixed routing probability (fixed-randomizer
    validation runs).
    """
    sifted, errors, alert = _routing_average(
        params, lambda p: np.array(_quantum_round_terms(params, p)), p_alert
    )
    qber = errors / sifted if sifted > 0 else 0.0
    mean_clicks = _routing_average(
        params,
        lambda p: np.array(
            [np.mean([raw_click_probs(params, 1.0 - p, k)[d] for k in range(4)])
             for d in range(6)]
        ),
        p_alert,
    )
    return RatesReport(
        attack="quantum",
        alert_rate=float(alert),
        sifted_rate=float(sifted),
        qber=float(qber),
        detector_click_probs=tuple(float(x) for x in mean_clicks),
        diagnostics={"p_alert": "haar" if p_alert is None else p_alert},
    )


def honest_rates(params: SystemParams) -> RatesReport:
    """Background/fidelity prediction for an attack-free run.

    Composed from the same squashing algebra as the quantum attack with the
    genuine photon always reaching the secure path (conclusive, compatible,
    unit probability).  Rounds switched at rate R_sw are measured on the
    alert hardware and counted as key; the conjugate path contributes only
    background alerts.
    """
    mu = params.source_mu * params.transmittance
    f = params.fidelity
    c = params.background
    eta = params.eta

    honest = SystemParams(
        alert_geiger=params.alert_geiger,
        secure_geiger=params.secure_geiger,
        fidelity=params.fidelity,
        eve=EveMeasurementParams(mu=0.0, fidelity=1.0, efficiency=1.0),
        resend_mu=mu,
        switch_rate=0.0,
        trigger_purity=1.0,
    )
    raw = [raw_click_probs(honest, 1.0, k)[2:] for k in range(4)]
    sifted_b = 0.0
    errors_b = 0.0
    for k_a in range(4):
        sifted_b += 0.25 * _squashed_basis(raw[k_a], k_a >> 1)
        errors_b += 0.25 * _squashed_single(raw[k_a], _partner(k_a))

    # switched rounds: single two-detector analyzer, basis matched half the time
    sifted_a = 0.0
    errors_a = 0.0
    for k_a in range(4):
        bit = k_a & 1
        p_corr = c[bit] + 1.0 - np.exp(-mu * 0.5 * f * eta[bit])
        p_wrong = c[1 - bit] + 1.0 - np.exp(-mu * 0.5 * (1.0 - f) * eta[1 - bit])
        sifted_a += 0.25 * 0.5 * (p_corr + p_wrong - p_corr * p_wrong)
        errors_a += 0.25 * 0.5 * p_wrong * (1.0 - 0.5 * p_corr)

    r_sw = params.switch_rate
    alert = (1.0 - r_sw) * (c[0] + c[1]) + r_sw * float(np.sum(c[2:]))
    sifted = (1.0 - r_sw) * sifted_b + r_sw * sifted_a
    errors = (1.0 - r_sw) * errors_b + r_sw * errors_a
    qber = errors / sifted if sifted > 0 else 0.0
    return RatesReport(
        attack="honest",
        alert_rate=float(alert),
        sifted_rate=float(sifted),
        qber=float(qber),
        diagnostics={"mu_effective": mu},
    )


def intercept_resend_rates() -> RatesReport:
    """Ideal single-photon intercept-resend: the which-path average.

    Alert (arrival) probability = Haar mean 1/2 x gated-window fraction 1/2;
    sifted rate = P(secure & gated & receiver arm matches Alice) and QBER is
    the conventional one quarter.
    """
    return RatesReport(
        attack="intercept_resend",
        alert_rate=0.25,
        sifted_rate=0.125,
        qber=0.25,
    )


def resolve_blinding_thresholds(
    detectors: Sequence[DetectorModel], blinding_power: float, clamp: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """(E_never, E_always) per detector (a1, a2, b1..b4) at the split powers."""
    alert = [d for d in detectors if d.label == "alert"]
    secure = [d for d in detectors if d.label == "secure"]
    if len(alert) != 2 or len(secure) != 4:
        raise ValueError("need 2 alert + 4 secure detectors of one gate variant")
    never, always = [], []
    for d in alert + secure:
        split = ALERT_BLINDING_SPLIT if d.label == "alert" else SECURE_BLINDING_SPLIT
        never.append(d.e_never(blinding_power * split, clamp=clamp))
        always.append(d.e_always(blinding_power * split, clamp=clamp))
    return np.array(never), np.array(always)


def blinding_attack_rates(
    params: SystemParams,
    detectors: Sequence[DetectorModel],
    pulse_energy: float,
    blinding_power: float,
    perfect_control: bool = False,
    clamp: bool = False,
) -> RatesReport:
    """Ramp-averaged trigger/alert rates (per trigger) and sifted rate (per round).

    ``perfect_control`` grants Eve deterministic control of the secure-path
    detectors (trigger rate 1), keeping the physical ramp for the alert path.

    The ramp averages assume a pure trigger polarization, whose alert
    probability is uniform on [0, 1] under the randomizer; a mixed trigger
    narrows that distribution and these closed forms no longer apply (the
    ``pure_trigger_assumed`` diagnostic records the check).
    """
    if pulse_energy < 0:
        raise ValueError("pulse energy must be >= 0")
    never, always = resolve_blinding_thresholds(detectors, blinding_power, clamp=clamp)
    if pulse_energy == 0.0:
        r_alert_i = np.zeros(2)
        r_secure_j = np.zeros(4)
    else:
        r_alert_i = 0.5 * np.maximum(
            1.0 - (never[:2] + always[:2]) / pulse_energy, 0.0
        )
        r_secure_j = np.maximum(
            1.0 - 2.0 * (never[2:] + always[2:]) / pulse_energy, 0.0
        )
    if perfect_control:
        r_secure_j = np.ones(4)

    sum_a = float(np.sum(r_alert_i))
    sum_b = float(np.sum(r_secure_j))
    r_sw = params.switch_rate
    alert = 0.5 * (1.0 - r_sw) * sum_a + 0.25 * r_sw * sum_b
    secure = 0.5 * r_sw * sum_a + 0.25 * (1.0 - r_sw) * sum_b

    p_c, p_w, _ = outcome_probabilities(params.eve)
    conclusive = p_c + p_w
    sifted = conclusive * secure
    qber = p_w / conclusive if conclusive > 0 else 0.0

    regime_ok = bool(
        pulse_energy >= 2.0 * np.max(always[:2])
        and pulse_energy >= 4.0 * np.max(always[2:])
        and pulse_energy <= 4.0 * np.min(never[:2])
        and pulse_energy <= 8.0 * np.min(never[2:])
    ) if not perfect_control else True
    return RatesReport(
        attack="blinding",
        alert_rate=float(alert),
        sifted_rate=float(sifted),
        qber=float(qber),
        detector_click_probs=tuple(np.concatenate([r_alert_i, r_secure_j])),
        diagnostics={
            "secure_trigger_rate": secure,
            "ramp_average_regime_ok": regime_ok,
            "pure_trigger_assumed": bool(params.trigger_purity >= 1.0 - 1e-12),
            "pulse_energy_pj": pulse_energy,
            "blinding_power_mw": blinding_power,
        },
    )


def wavelength_blinding_rates(params: SystemParams) -> RatesReport:
    """Granted-control attack: alert rate equals the path-switch rate."""
    p_c, p_w, _ = outcome_probabilities(params.eve)
    conclusive = p_c + p_w
    r_sw = params.switch_rate
    return RatesReport(
        attack="wavelength_blinding",
        alert_rate=float(r_sw),
        sifted_rate=float(conclusive * (1.0 - r_sw)),
        qber=float(p_w / conclusive) if conclusive > 0 else 0.0,
    )


def integrated_attack_rates(
    reports: Sequence[RatesReport], weights: Sequence[float]
) -> RatesReport:
    """Convex combination of the three family reports with menu weights."""
    if len(reports) != 3 or len(weights) != 3:
        raise ValueError("need three reports and three weights (quantum, blinding, wavelength)")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must be non-negative and sum to 1, got {list(w)}")
    alert = float(np.dot(w, [r.alert_rate for r in reports]))
    sifted = float(np.dot(w, [r.sifted_rate for r in reports]))
    qber = float(np.dot(w, [r.qber for r in reports]))
    ses = {}
    for name in ("alert_se", "sifted_se", "qber_se"):
        vals = [getattr(r, name) for r in reports]
        if all(v is not None for v in vals):
            ses[name] = float(np.sqrt(np.sum((w * np.asarray(vals)) ** 2)))
        else:
            ses[name] = None
    provenance = (
        "monte_carlo"
        if all(r.provenance == "monte_carlo" for r in reports)
        else "analytic"
    )
    return RatesReport(
        attack="integrated",
        alert_rate=alert,
        sifted_rate=sifted,
        qber=qber,
        provenance=provenance,
        alert_se=ses["alert_se"],
        sifted_se=ses["sifted_se"],
        qber_se=ses["qber_se"],
        diagnostics={"weights": list(map(float, w))},
    )


def fit_fixed_period_sinusoid(theta2: np.ndarray, values: np.ndarray) -> dict:
    """Least-squares fit of ``C + A cos(4 t) + B sin(4 t)`` (period 90 deg).

    Returns amplitude, offset, visibility = amplitude/offset, phase (in
    the ``C + A cos(4t - phase)`` convention) and R^2.  The period is fixed
    by the half-wave-plate geometry of the sweep.
    """
    t = np.asarray(theta2, dtype=float)
    y = np.asarray(values, dtype=float)
    design = np.column_stack([np.ones_like(t), np.cos(4.0 * t), np.sin(4.0 * t)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    c0, a, b = coef
    resid = y - design @ coef
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    amplitude = float(np.hypot(a, b))
    # 1-sigma visibility uncertainty from the linear LSQ covariance
    dof = max(len(y) - 3, 1)
    sigma2 = ss_res / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    var_amp = (
        (a / amplitude) ** 2 * cov[1, 1]
        + (b / amplitude) ** 2 * cov[2, 2]
        + 2 * (a / amplitude) * (b / amplitude) * cov[1, 2]
    ) if amplitude > 0 else cov[1, 1]
    visibility = amplitude / c0 if c0 > 0 else 0.0
    vis_sigma = float(
        np.sqrt(max(var_amp, 0.0)) / c0 + abs(visibility) * np.sqrt(cov[0, 0]) / c0
    ) if c0 > 0 else float("inf")
    return {
        "offset": float(c0),
        "amplitude": amplitude,
        "phase": float(np.arctan2(b, a)),
        "visibility": float(visibility),
        "visibility_sigma": vis_sigma,
        "r_squared": 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0,
    }


def visibility_sweep(
    theta2_grid: np.ndarray,
    source: "adversary.EveSourceConfig",
    randomizer=None,
    pulse_energy: Optional[float] = None,
) -> dict:
    """Deterministic received-energy sweep versus the HWP2 angle.

    Returns the per-angle maximum energies reaching an alert and a secure
    detector within the gated window (E_alert = p_a E_T / 2,
    E_secure = p_b E_T / 4) for the fixed randomizer, plus the sinusoid fit
    of the alert-side curve.
    """
    from dataclasses import replace

    from polguard.protocol import faked_state_routing

    u = randomizer if randomizer is not None else qmath.bob_fixed_randomizer()
    e_t = pulse_energy if pulse_energy is not None else source.pulse_energy_pj
    thetas = np.asarray(theta2_grid, dtype=float)
    e_alert = np.empty_like(thetas)
    e_secure = np.empty_like(thetas)
    for i, t2 in enumerate(thetas):
        pol, _ = adversary.eve_source_state(replace(source, theta2=float(t2)))
        routing = faked_state_routing(pol, source.phi_e, u)
        e_alert[i] = 0.5 * routing.p_alert * e_t
        e_secure[i] = 0.25 * routing.p_secure * e_t
    fit = fit_fixed_period_sinusoid(thetas, e_alert)
    return {
        "theta2": thetas,
        "e_alert_pj": e_alert,
        "e_secure_pj": e_secure,
        "fit": fit,
        "purity": source.purity,
        "expected_visibility": float(np.sqrt(2.0 * source.purity - 1.0)),
    }
