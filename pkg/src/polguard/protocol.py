"""Photon roundtrip model of the two-way transceiver.

A round starts with a polarization-path state ``(|H> + |V>)/sqrt(2) |a>``,
which the unbalanced polarization interferometer (PMZI) swaps into a
time-bin qubit with polarization ``|H>``.  The remote party encodes a BB84
phase on the leading bin and reflects off a Faraday mirror, flipping the
polarization to its orthogonal state.  Because the reverse pass through a
fixed reciprocal element ``T`` applies ``T.T``, the roundtrip polarization
operator is ``T.T @ J @ T = det(T) J`` (see ``qmath``): the randomizer and
all channel birefringence cancel, the photon returns with ``|V>`` and is
routed entirely to the secure path ``b``.  One-way光 from an intruder
passes the randomizer once, so its alert-path probability is
``<H| U rho U^dag |H>``.

Time-window bookkeeping: a one-way PMZI passage distributes pulse energy
over early/superposition/late windows with fractions 1/4, 1/2, 1/4 for a
balanced splitter.  Detection is gated on the superposition window, hence
``GATED_WINDOW_FRACTION = 0.5``.  The roundtrip interpretation of the
25% average alert figure is (Haar mean 1/2) x (window fraction 1/2).

Phase indices: ``BB84_PHASES[k]`` for k = 0..3 maps to phases
(0, pi, pi/2, 3pi/2); k>>1 is the basis (0 = D/A, 1 = R/L) and k&1 the bit.
Secure detectors b1..b4 are matched to phases 0, pi, pi/2, 3pi/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from polguard import qmath
from polguard.detectors import DetectorModel, GeigerParams, geiger_click_probability
from polguard.qmath import JonesUnitary, PolarizationState

BB84_PHASES = (0.0, np.pi, np.pi / 2.0, 3.0 * np.pi / 2.0)
GATED_WINDOW_FRACTION = 0.5

_IDENTITY = JonesUnitary(np.eye(2, dtype=complex))


def phase_index(phase: float) -> int:
    for k, p in enumerate(BB84_PHASES):
        if abs(phase - p) < 1e-9:
            return k
    raise ValueError(f"phase {phase} is not one of the four BB84 phases")


def phase_basis(k: int) -> int:
    """0 for the D/A pair (phases 0, pi), 1 for the R/L pair."""
    return k >> 1


def phase_bit(k: int) -> int:
    return k & 1


@dataclass(frozen=True)
class TimeBinState:
    """Key qubit on the long/short time bins: amplitudes (a_l, a_s)."""

    amplitudes: tuple[complex, complex]
    coherent: bool = True

    def __post_init__(self):
        a_l, a_s = self.amplitudes
        if self.coherent:
            norm = abs(a_l) ** 2 + abs(a_s) ** 2
            if abs(norm - 1.0) > 1e-12:
                raise ValueError("coherent time-bin amplitudes must be normalized")


def phase_encoded_timebin(phase: float) -> TimeBinState:
    """(|t_l> + e^{i phase} |t_s>)/sqrt(2)."""
    return TimeBinState((1.0 / np.sqrt(2.0), np.exp(1j * phase) / np.sqrt(2.0)))


@dataclass(frozen=True)
class PhotonRound:
    """One transmission cycle: phase choice, randomizer setting, switch flag."""

    alice_phase: float
    randomizer: JonesUnitary
    switch_applied: bool = False
    mean_photon_number: float = 0.1
    channel: JonesUnitary = field(default=_IDENTITY)

    def __post_init__(self):
        phase_index(self.alice_phase)  # validates
        if self.mean_photon_number < 0:
            raise ValueError("mean photon number must be >= 0")


@dataclass(frozen=True)
class RoutingOutcome:
    """Path statistics conditioned on the gated superposition window."""

    p_alert: float
    p_secure: float
    window_fraction: float = GATED_WINDOW_FRACTION

    def __post_init__(self):
        if abs(self.p_alert + self.p_secure - 1.0) > 1e-12:
            raise ValueError("p_alert + p_secure must equal 1 in the gated window")
        if not 0.0 <= self.window_fraction <= 1.0:
            raise ValueError("window_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class ClickRecord:
    """Per-round detector outcomes; alert is true iff an alert detector fired."""

    d_a1: bool = False
    d_a2: bool = False
    d_b1: bool = False
    d_b2: bool = False
    d_b3: bool = False
    d_b4: bool = False
    basis_bob: Optional[int] = None  # 0 = D/A, 1 = R/L
    sifted_bit: Optional[int] = None
    alert: bool = False

    def __post_init__(self):
        if self.alert != (self.d_a1 or self.d_a2):
            raise ValueError("alert flag must mirror the alert-path clicks")

    @property
    def secure_clicks(self) -> tuple[bool, bool, bool, bool]:
        return (self.d_b1, self.d_b2, self.d_b3, self.d_b4)


def roundtrip_operator(round_: PhotonRound) -> np.ndarray:
    """Polarization operator of the full roundtrip: T.T @ J @ T."""
    t = round_.channel.matrix @ round_.randomizer.matrix
    return t.T @ qmath.J_MIRROR @ t


def genuine_roundtrip(round_: PhotonRound) -> RoutingOutcome:
    """Route the genuine photon; ideal optics give p_alert = 0 for every U."""
    m = roundtrip_operator(round_)
    out = m @ qmath.KET_H  # outgoing polarization after the first PMZI pass
    norm = abs(out[0]) ** 2 + abs(out[1]) ** 2
    p_alert = abs(out[0]) ** 2 / norm
    return RoutingOutcome(p_alert=p_alert, p_secure=1.0 - p_alert)


def genuine_output_state(round_: PhotonRound) -> np.ndarray:
    """Polarization before the final analyzer, (|H> + e^{i phi_A}|V>)/sqrt(2).

    The PMZI swap maps the long/short time-bin amplitudes back onto H/V;
    the roundtrip global phase det(T) is stripped.
    """
    return np.array([1.0, np.exp(1j * round_.alice_phase)], dtype=complex) / np.sqrt(2.0)


def faked_state_routing(
    pol: PolarizationState, phase: float, randomizer: JonesUnitary
) -> RoutingOutcome:
    """Path statistics for one-way (intruder) light of polarization ``pol``.

    Tracing the post-PMZI state over polarization leaves the path populations
    p_alert = <H| U rho U^dag |H> and p_secure = <V| U rho U^dag |V>; the
    encoded phase only enters the path coherences (as cos(phase)) and does
    not affect routing.  One-way passage puts half the energy into the gated
    superposition window.
    """
    del phase  # affects coherences only; see docstring
    u = randomizer.matrix
    rotated = u @ pol.rho @ u.conj().T
    p_alert = float(rotated[0, 0].real)
    p_alert = min(max(p_alert, 0.0), 1.0)
    return RoutingOutcome(p_alert=p_alert, p_secure=1.0 - p_alert)


def _geiger(d) -> GeigerParams:
    return d.geiger if isinstance(d, DetectorModel) else d


def bob_measurement(
    routing: RoutingOutcome,
    phase_k: int,
    detectors: Sequence,
    rng: np.random.Generator,
    mu: float = 1.0,
    fidelity: float = 1.0,
    switch_applied: bool = False,
) -> ClickRecord:
    """Sample Geiger-mode clicks for one received pulse of mean number ``mu``.

    ``detectors`` holds six Geiger-parameterized detectors ordered
    (a1, a2, b1, b2, b3, b4).

    Single-photon semantics: Bob's passive bases are realized per round as
    sampled choices (alert basis for path a, one of the two secure arms for
    path b), so the full gated-path energy lands in the sampled analyzer.
    The squashing-model used by ``analysis``/``simengine`` instead splits a
    multi-photon pulse deterministically across both arms; for weak pulses
    the two agree to O(mu^2).
    """
    gp = [_geiger(d) for d in detectors]
    if len(gp) != 6:
        raise ValueError("expected six detectors (2 alert + 4 secure)")
    w = routing.window_fraction
    basis_k = phase_basis(phase_k)
    bit_k = phase_bit(phase_k)

    alert_basis = int(rng.random() < 0.5)
    secure_arm = int(rng.random() < 0.5)  # 0 = D/A arm, 1 = R/L arm

    mu_eff = [0.0] * 6
    # path a: single analyzer in basis alert_basis
    mu_a = mu * routing.p_alert * w
    if alert_basis == basis_k:
        mu_eff[0 + bit_k] = mu_a * fidelity
        mu_eff[0 + (1 - bit_k)] = mu_a * (1.0 - fidelity)
    else:
        mu_eff[0] = mu_a / 2.0
        mu_eff[1] = mu_a / 2.0
    # path b: photon enters the sampled arm
    mu_b = mu * routing.p_secure * w
    arm_slot = 2 + 2 * secure_arm
    if secure_arm == basis_k:
        mu_eff[arm_slot + bit_k] = mu_b * fidelity
        mu_eff[arm_slot + (1 - bit_k)] = mu_b * (1.0 - fidelity)
    else:
        mu_eff[arm_slot] = mu_b / 2.0
        mu_eff[arm_slot + 1] = mu_b / 2.0

    clicks = [
        bool(rng.random() < geiger_click_probability(g, m)) for g, m in zip(gp, mu_eff)
    ]
    return _squash_record(clicks, alert_basis, switch_applied, rng)


def _squash_record(
    clicks: Sequence[bool],
    alert_basis: int,
    switch_applied: bool,
    rng: np.random.Generator,
) -> ClickRecord:
    """Squash raw clicks into a ClickRecord; alert/secure roles follow the switch."""
    a1, a2, b1, b2, b3, b4 = clicks
    # role-dependent alert accounting is done by the caller's tally; the
    # record itself keeps physical clicks (alert flag = path-a OR)
    if switch_applied:
        key_clicks = [(a1, alert_basis, 0), (a2, alert_basis, 1)]
    else:
        key_clicks = [(b1, 0, 0), (b2, 0, 1), (b3, 1, 0), (b4, 1, 1)]
    fired = [(basis, bit) for on, basis, bit in key_clicks if on]
    basis_bob = None
    sifted_bit = None
    if fired:
        bases = {b for b, _ in fired}
        if len(bases) == 1:
            basis_bob = fired[0][0]
            bits = [bit for _, bit in fired]
            if len(set(bits)) == 1:
                sifted_bit = bits[0]
            else:
                sifted_bit = int(rng.random() < 0.5)
    return ClickRecord(
        d_a1=a1, d_a2=a2, d_b1=b1, d_b2=b2, d_b3=b3, d_b4=b4,
        basis_bob=basis_bob, sifted_bit=sifted_bit,
        alert=(a1 or a2),
    )


def sift_and_squash(
    records: Sequence[ClickRecord],
    sender_phases: Sequence[int],
    rng: Optional[np.random.Generator] = None,
) -> tuple[list[int], int, int]:
    """Apply the squashing rule and basis sifting to a batch of records.

    Secure-path multi-clicks: clicks spanning both bases are discarded;
    same-basis double clicks yield a random bit (rng required for that
    case).  Alert-path clicks are counted raw, never squashed.

    Returns (sifted_bits, qber_numerator, alert_count); ``qber_numerator``
    counts sifted bits differing from the sender's bit.
    """
    if len(records) != len(sender_phases):
        raise ValueError("records and sender_phases must have equal length")
    bits: list[int] = []
    errors = 0
    alerts = 0
    for rec, k in zip(records, sender_phases):
        alerts += int(rec.d_a1) + int(rec.d_a2)
        da = rec.d_b1 or rec.d_b2
        rl = rec.d_b3 or rec.d_b4
        if da and rl:
            continue  # cross-basis double: discarded
        if not (da or rl):
            continue
        basis = 0 if da else 1
        pair = (rec.d_b1, rec.d_b2) if da else (rec.d_b3, rec.d_b4)
        if pair[0] and pair[1]:
            if rng is None:
                raise ValueError("rng required to squash same-basis double clicks")
            bit = int(rng.random() < 0.5)
        else:
            bit = 0 if pair[0] else 1
        if basis != phase_basis(k):
            continue  # sifting: sender and receiver bases differ
        bits.append(bit)
        errors += int(bit != phase_bit(k))
    return bits, errors, alerts
