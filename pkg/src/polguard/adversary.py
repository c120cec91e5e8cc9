"""Eve's faked-state source and the attack strategy catalog.

The source model mirrors the three-stage preparation bench: a half-wave
plate HWP1 feeding a strongly unbalanced polarization interferometer sets
the polarization purity by incoherently mixing orthogonal components with
weight ``cos^2(2 theta1)``, giving purity ``1 - sin^2(4 theta1)/2``; a
second half-wave plate HWP2 and a quarter-wave plate then move the state
anywhere on the Poincare sphere; a final interferometer phase-encodes the
time-bin qubit.

Eve's measurement of an encoded pulse has four outcomes with Poissonian
single-click probabilities (mu = mean photons per pulse, F_e = measurement
fidelity, eta_e = overall efficiency):

    P_correct      = exp(-mu (1-F_e) eta_e) (1 - exp(-mu F_e eta_e)) / 2
    P_wrong        = exp(-mu F_e eta_e) (1 - exp(-mu (1-F_e) eta_e)) / 2
    P_incompatible = exp(-mu eta_e / 2) (1 - exp(-mu eta_e / 2)) / 2
                       (per incompatible phase; two such phases)

and the remainder is inconclusive (no click, or multiple clicks).  Attack
strategies only resend on conclusive rounds; trigger/alert statistics of
the bright-pulse attacks are therefore normalized per trigger pulse while
sifted-key statistics stay per protocol round (see ``analysis``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from polguard import qmath
from polguard.detectors import blinded_click_probability
from polguard.protocol import (
    ClickRecord,
    TimeBinState,
    faked_state_routing,
    phase_basis,
    phase_encoded_timebin,
)
from polguard.qmath import JonesUnitary, PolarizationState

BB84_PHASE_COUNT = 4
DEFAULT_QWP_ANGLE = -np.pi / 4.0


def polarization_purity(theta1: float) -> float:
    """Purity of the source polarization as a function of the HWP1 angle."""
    return float(1.0 - 0.5 * np.sin(4.0 * theta1) ** 2)


def theta1_for_purity(purity: float) -> float:
    """HWP1 angle in [0, pi/8] producing the requested purity."""
    if not 0.5 <= purity <= 1.0:
        raise ValueError(f"purity must lie in [1/2, 1], got {purity}")
    return float(np.arcsin(np.sqrt(2.0 * (1.0 - purity)))) / 4.0


@dataclass(frozen=True)
class EveSourceConfig:
    """Waveplate settings and pulse energy of the faked-state source."""

    theta1: float = 0.0
    theta2: float = 0.0
    qwp_angle: float = DEFAULT_QWP_ANGLE
    phi_e: float = 0.0
    pulse_energy_pj: float = 1.0

    def __post_init__(self):
        for name in ("theta1", "theta2", "qwp_angle", "phi_e"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.pulse_energy_pj < 0:
            raise ValueError("pulse energy must be >= 0")

    @property
    def purity(self) -> float:
        return polarization_purity(self.theta1)


def eve_source_state(config: EveSourceConfig) -> tuple[PolarizationState, TimeBinState]:
    """Polarization (mixed via HWP1, rotated by HWP2+QWP) and time-bin parts."""
    weight = float(np.cos(2.0 * config.theta1) ** 2)
    mixture = qmath.mixed_state(weight, qmath.KET_V)
    rotation = JonesUnitary(
        qmath.waveplate("quarter", config.qwp_angle).matrix
        @ qmath.waveplate("half", config.theta2).matrix
    )
    pol = qmath.conjugate_state(rotation, mixture)
    return pol, phase_encoded_timebin(config.phi_e)


@dataclass(frozen=True)
class EveMeasurementParams:
    """Eve's intercept measurement: mean photons, fidelity, efficiency."""

    mu: float = 0.5
    fidelity: float = 0.98
    efficiency: float = 0.6

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if not 0.5 <= self.fidelity <= 1.0:
            raise ValueError("fidelity must lie in [1/2, 1]")
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")


class EveOutcome(enum.IntEnum):
    CORRECT = 0
    WRONG = 1
    INCOMPATIBLE = 2
    INCONCLUSIVE = 3


def outcome_probabilities(params: EveMeasurementParams) -> tuple[float, float, float]:
    """(P_correct, P_wrong, P_incompatible-per-phase); remainder inconclusive."""
    mu, f, eta = params.mu, params.fidelity, params.efficiency
    p_c = 0.5 * np.exp(-mu * (1.0 - f) * eta) * (1.0 - np.exp(-mu * f * eta))
    p_w = 0.5 * np.exp(-mu * f * eta) * (1.0 - np.exp(-mu * (1.0 - f) * eta))
    p_nc = 0.5 * np.exp(-mu * eta / 2.0) * (1.0 - np.exp(-mu * eta / 2.0))
    return float(p_c), float(p_w), float(p_nc)


def eve_measurement_outcome(
    params: EveMeasurementParams,
    rng: np.random.Generator,
    alice_phase_k: int,
) -> tuple[EveOutcome, Optional[int]]:
    """Sample Eve's measurement of a pulse Alice encoded with phase index k.

    Returns the outcome and the phase index Eve will resend (None when
    inconclusive).  A correct outcome reproduces Alice's phase, a wrong one
    the opposite phase of the same basis, an incompatible one a uniformly
    chosen phase of the conjugate basis.
    """
    p_c, p_w, p_nc = outcome_probabilities(params)
    u = rng.random()
    if u < p_c:
        return EveOutcome.CORRECT, alice_phase_k
    if u < p_c + p_w:
        return EveOutcome.WRONG, alice_phase_k ^ 1
    if u < p_c + p_w + 2.0 * p_nc:
        other = (1 - phase_basis(alice_phase_k)) << 1
        return EveOutcome.INCOMPATIBLE, other + int(rng.random() < 0.5)
    return EveOutcome.INCONCLUSIVE, None


ATTACK_KINDS = (
    "intercept_resend",
    "quantum",
    "blinding",
    "wavelength_blinding",
    "integrated",
)


@dataclass(frozen=True)
class AttackConfig:
    """Strategy descriptor consumed by the Monte Carlo engine and the CLI."""

    kind: str
    source: EveSourceConfig = field(default_factory=EveSourceConfig)
    measurement: EveMeasurementParams = field(default_factory=EveMeasurementParams)
    resend_mu: float = 1.0
    blinding_power_mw: float = 1.09
    blinding_purity: float = 0.5  # unpolarized blinding light by default
    perfect_secure_control: bool = False
    weights: tuple[float, float, float] = (1.0, 0.0, 0.0)  # (p_Q, p_Bl, p_W|Bl)
    clamp_thresholds: bool = False

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.resend_mu < 0:
            raise ValueError("resend_mu must be >= 0")
        if self.blinding_power_mw < 0:
            raise ValueError("blinding power must be >= 0")
        if not 0.5 <= self.blinding_purity <= 1.0:
            raise ValueError("blinding purity must lie in [1/2, 1]")
        w = self.weights
        if len(w) != 3 or any(x < 0 for x in w):
            raise ValueError("weights must be three non-negative numbers")
        if self.kind == "integrated" and abs(sum(w) - 1.0) > 1e-9:
            raise ValueError(f"integrated attack weights must sum to 1, got {sum(w)}")

    @property
    def trigger_state(self) -> PolarizationState:
        return eve_source_state(self.source)[0]

    @property
    def trigger_purity(self) -> float:
        return self.source.purity

    @property
    def blinding_state(self) -> PolarizationState:
        """Polarization of the blinding light (eigenbasis H/V by convention)."""
        lam = qmath.overlap_bounds(self.blinding_purity).max
        return qmath.mixed_state(lam, qmath.KET_V)

    def with_purity(self, purity: float) -> "AttackConfig":
        return replace(self, source=replace(self.source, theta1=theta1_for_purity(purity)))


def intercept_resend_preset() -> AttackConfig:
    """Conventional intercept-resend: random basis, ideal single-photon detection."""
    return AttackConfig(
        kind="intercept_resend",
        source=EveSourceConfig(theta1=0.0),
        measurement=EveMeasurementParams(mu=1.0, fidelity=1.0, efficiency=1.0),
        resend_mu=1.0,
    )


@dataclass(frozen=True)
class ForwardedPulse:
    """What Eve sends to the receiver after a conclusive measurement."""

    phase_k: int
    polarization: PolarizationState
    mean_photon_number: float


def run_quantum_attack(
    config: AttackConfig,
    rng: np.random.Generator,
    alice_phase_k: int,
) -> Optional[ForwardedPulse]:
    """One round of the single-photon resend attack.

    Eve measures the encoded pulse; on a conclusive click she forwards a
    pulse carrying her phase and source polarization (resend losses folded
    into ``resend_mu``).  Inconclusive rounds forward nothing, leaving only
    background clicks at the receiver.
    """
    _, phase = eve_measurement_outcome(config.measurement, rng, alice_phase_k)
    if phase is None:
        return None
    return ForwardedPulse(
        phase_k=phase,
        polarization=config.trigger_state,
        mean_photon_number=config.resend_mu,
    )


def trigger_energies(
    p_alert: float,
    phase_k: int,
    alert_basis: int,
    pulse_energy: float,
) -> tuple[float, ...]:
    """Gated trigger energies (a1, a2, b1..b4) for one bright pulse.

    Path a carries half the gated energy times the routing probability; when
    the alert analyzer basis matches the pulse phase the interference puts
    everything on the bit-selected detector, otherwise it splits evenly.
    Path b splits over the two passive arms; the matched arm concentrates on
    the phase-selected detector, the conjugate arm splits evenly.
    """
    p_b = 1.0 - p_alert
    out = [0.0] * 6
    if (phase_k >> 1) == alert_basis:
        out[phase_k & 1] = 0.5 * p_alert * pulse_energy
    else:
        out[0] = out[1] = 0.25 * p_alert * pulse_energy
    for j in range(4):
        if phase_k == j:
            out[2 + j] = 0.25 * p_b * pulse_energy
        elif (phase_k >> 1) == (j >> 1):
            out[2 + j] = 0.0
        else:
            out[2 + j] = 0.125 * p_b * pulse_energy
    return tuple(out)


def run_blinding_attack(
    config: AttackConfig,
    detectors,
    randomizer: JonesUnitary,
    rng: np.random.Generator,
    alice_phase_k: int,
    alert_basis: Optional[int] = None,
):
    """One round of the detector-blinding attack against blinded hardware.

    ``detectors`` holds six DetectorModel of one gate variant, ordered
    (a1, a2, b1..b4).  Returns a ``protocol.ClickRecord`` (blinded detectors
    are dark-count free, so an inconclusive round yields no clicks).
    """
    _, phase = eve_measurement_outcome(config.measurement, rng, alice_phase_k)
    if phase is None:
        return ClickRecord()
    beta = alert_basis if alert_basis is not None else int(rng.random() < 0.5)
    routing = faked_state_routing(config.trigger_state, config.source.phi_e, randomizer)
    r_alert = qmath.conjugate_state(randomizer, config.blinding_state).rho[0, 0].real
    energies = trigger_energies(
        routing.p_alert, phase, beta, config.source.pulse_energy_pj
    )
    clicks = []
    for slot, (d, energy) in enumerate(zip(detectors, energies)):
        split = 0.5 * r_alert if d.label == "alert" else 0.25 * (1.0 - r_alert)
        power = split * config.blinding_power_mw
        if config.perfect_secure_control and d.label == "secure":
            prob = 1.0 if phase == slot - 2 else 0.0
        else:
            prob = blinded_click_probability(
                d, energy, power, clamp=config.clamp_thresholds
            )
        clicks.append(bool(rng.random() < prob))
    return ClickRecord(
        d_a1=clicks[0], d_a2=clicks[1], d_b1=clicks[2], d_b2=clicks[3],
        d_b3=clicks[4], d_b4=clicks[5], alert=clicks[0] or clicks[1],
    )


def run_wavelength_blinding_attack(
    config: AttackConfig,
    rng: np.random.Generator,
    alice_phase_k: int,
    switch_applied: bool,
):
    """One round of the granted wavelength-dependent control model.

    The alert path clicks iff the receiver switched roles this round; on a
    conclusive compatible outcome and no switch, Eve deterministically fires
    the secure detector matching her phase.
    """
    outcome, phase = eve_measurement_outcome(config.measurement, rng, alice_phase_k)
    kwargs = {"d_a1": switch_applied, "alert": switch_applied}
    if (
        not switch_applied
        and outcome in (EveOutcome.CORRECT, EveOutcome.WRONG)
        and phase is not None
    ):
        kwargs[f"d_b{phase + 1}"] = True
        kwargs["basis_bob"] = phase >> 1
        kwargs["sifted_bit"] = phase & 1
    return ClickRecord(**kwargs)
