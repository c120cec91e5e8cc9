import numpy as np
import pytest

from polguard import protocol, qmath
from polguard.detectors import GeigerParams
from polguard.protocol import (
    BB84_PHASES,
    ClickRecord,
    PhotonRound,
    RoutingOutcome,
    bob_measurement,
    faked_state_routing,
    genuine_output_state,
    genuine_roundtrip,
    sift_and_squash,
)

IDEAL = [GeigerParams(efficiency=1.0, background=0.0)] * 6


def make_round(rng, phase=0.0, channel=None):
    kwargs = {}
    if channel is not None:
        kwargs["channel"] = channel
    return PhotonRound(alice_phase=phase, randomizer=qmath.haar_random_unitary(rng), **kwargs)


class TestGenuineRoundtrip:
    def test_immune_for_any_randomizer(self, rng):
        for phase in BB84_PHASES:
            outcome = genuine_roundtrip(make_round(rng, phase))
            assert outcome.p_alert < 1e-10
            assert outcome.p_secure == pytest.approx(1.0, abs=1e-10)

    def test_immune_with_birefringent_channel(self, rng):
        outcome = genuine_roundtrip(
            make_round(rng, channel=qmath.haar_random_unitary(rng))
        )
        assert outcome.p_alert < 1e-10

    def test_batch_immunity(self, rng):
        worst = max(
            genuine_roundtrip(make_round(rng)).p_alert for _ in range(2000)
        )
        assert worst < 1e-10

    def test_output_polarization_diagonal(self, rng):
        out = genuine_output_state(make_round(rng, phase=0.0))
        assert abs(np.vdot(qmath.KET_D, out)) == pytest.approx(1.0, abs=1e-12)

    def test_output_polarization_antidiagonal_identity_randomizer(self):
        round_ = PhotonRound(alice_phase=np.pi, randomizer=qmath.JonesUnitary(np.eye(2)))
        assert genuine_roundtrip(round_).p_alert < 1e-12
        out = genuine_output_state(round_)
        assert abs(np.vdot(qmath.KET_A, out)) == pytest.approx(1.0, abs=1e-12)


class TestFakedStateRouting:
    def test_eve_knows_u_reaches_zero_alert(self, rng):
        u = qmath.haar_random_unitary(rng)
        rho = qmath.conjugate_state(
            qmath.JonesUnitary(u.matrix.conj().T), qmath.pure_state(qmath.KET_V)
        )
        outcome = faked_state_routing(rho, 0.0, u)
        assert outcome.p_alert == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed_splits_evenly(self, rng):
        outcome = faked_state_routing(qmath.maximally_mixed(), 0.0,
                                      qmath.haar_random_unitary(rng))
        assert outcome.p_alert == pytest.approx(0.5, abs=1e-12)

    def test_window_fraction(self, rng):
        outcome = faked_state_routing(qmath.maximally_mixed(), 0.0,
                                      qmath.haar_random_unitary(rng))
        assert outcome.window_fraction == 0.5

    def test_haar_average_alert_quarter(self, rng):
        us = qmath.haar_random_unitaries(rng, 1_000_000)
        p_alert = qmath.conjugated_overlaps(us, qmath.pure_state(qmath.KET_V), qmath.KET_H)
        gated_alert = p_alert * protocol.GATED_WINDOW_FRACTION
        assert gated_alert.mean() == pytest.approx(0.25, abs=0.003)

    def test_alert_between_overlap_bounds(self, rng):
        lam = qmath.overlap_bounds(0.63).max
        rho = qmath.mixed_state(lam, qmath.KET_R)
        hi, lo = qmath.overlap_bounds(0.63)
        samples = qmath.sample_conjugated_overlaps(rng, rho, qmath.KET_H, 1_000_000)
        assert samples.min() >= lo - 1e-9
        assert samples.max() <= hi + 1e-9


class TestBobMeasurement:
    def test_vacuum_never_clicks(self, rng):
        routing = RoutingOutcome(p_alert=0.2, p_secure=0.8)
        for _ in range(100):
            rec = bob_measurement(routing, 0, IDEAL, rng, mu=0.0)
            assert not any([rec.d_a1, rec.d_a2, *rec.secure_clicks])

    def test_genuine_click_probability_matches_window(self, rng):
        # mu = 1, eta = 1, F = 1, phase 0: the matched detector in the sampled
        # D/A arm clicks with 1 - exp(-1/2); the arm is sampled half the time.
        routing = RoutingOutcome(p_alert=0.0, p_secure=1.0)
        n = 60_000
        hits = sum(
            bob_measurement(routing, 0, IDEAL, rng, mu=1.0, fidelity=1.0).d_b1
            for _ in range(n)
        )
        expected = 0.5 * (1.0 - np.exp(-0.5))
        assert hits / n == pytest.approx(expected, abs=4 * np.sqrt(expected / n))

    def test_full_alert_saturates(self, rng):
        routing = RoutingOutcome(p_alert=1.0, p_secure=0.0)
        recs = [bob_measurement(routing, 0, IDEAL, rng, mu=200.0) for _ in range(200)]
        assert all(r.alert for r in recs)


class TestSiftAndSquash:
    def test_single_click_matching_basis(self):
        rec = ClickRecord(d_b1=True, basis_bob=0, sifted_bit=0)
        bits, errors, alerts = sift_and_squash([rec], [0])
        assert bits == [0] and errors == 0 and alerts == 0

    def test_single_click_wrong_detector_is_error(self):
        rec = ClickRecord(d_b2=True)
        bits, errors, _ = sift_and_squash([rec], [0])
        assert bits == [1] and errors == 1

    def test_same_basis_double_gives_random_bit(self, rng):
        recs = [ClickRecord(d_b1=True, d_b2=True) for _ in range(4000)]
        bits, errors, _ = sift_and_squash(recs, [0] * 4000, rng)
        assert len(bits) == 4000
        assert errors / 4000 == pytest.approx(0.5, abs=0.05)

    def test_cross_basis_double_discarded(self):
        rec = ClickRecord(d_b1=True, d_b3=True)
        bits, errors, _ = sift_and_squash([rec], [0])
        assert bits == [] and errors == 0

    def test_basis_mismatch_discarded(self):
        rec = ClickRecord(d_b3=True)
        bits, _, _ = sift_and_squash([rec], [0])
        assert bits == []

    def test_alert_counted_raw(self):
        rec = ClickRecord(d_a1=True, d_a2=True, alert=True)
        _, _, alerts = sift_and_squash([rec], [0])
        assert alerts == 2

    def test_requires_rng_for_double(self):
        rec = ClickRecord(d_b1=True, d_b2=True)
        with pytest.raises(ValueError):
            sift_and_squash([rec], [0])


class TestRecordInvariants:
    def test_alert_flag_must_mirror_clicks(self):
        with pytest.raises(ValueError):
            ClickRecord(d_a1=True, alert=False)

    def test_routing_normalization_enforced(self):
        with pytest.raises(ValueError):
            RoutingOutcome(p_alert=0.3, p_secure=0.3)

    def test_phase_validation(self, rng):
        with pytest.raises(ValueError):
            PhotonRound(alice_phase=0.3, randomizer=qmath.haar_random_unitary(rng))
