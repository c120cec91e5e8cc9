import numpy as np
import pytest

from polguard import analysis, qmath
from polguard.adversary import EveMeasurementParams, outcome_probabilities
from polguard.analysis import (
    RatesReport,
    SystemParams,
    blinding_attack_rates,
    fit_fixed_period_sinusoid,
    honest_rates,
    integrated_attack_rates,
    quantum_attack_rates,
    raw_click_probs,
    wavelength_blinding_rates,
)
from polguard.datasets import (
    DESK_BLINDING_POWER_MW,
    DESK_PULSE_ENERGY_PJ,
    desk_scale_system,
)
from polguard.detectors import GeigerParams


def zero_system(**kw):
    zero = GeigerParams(efficiency=0.0, background=0.0)
    return desk_scale_system(
        alert_geiger=(zero, zero), secure_geiger=(zero,) * 4, **kw
    )


class TestRawClickProbs:
    def test_vacuum_gives_background(self, desk_system):
        params = desk_scale_zero_mu(desk_system)
        probs = raw_click_probs(params, 1.0, 0)
        assert probs == pytest.approx(tuple(params.background), abs=1e-15)

    def test_perfect_fidelity_kills_partner(self, desk_system):
        from dataclasses import replace

        params = replace(desk_system, fidelity=1.0)
        probs = raw_click_probs(params, 1.0, 0)
        assert probs[3] == pytest.approx(params.secure_geiger[1].background, abs=1e-15)

    def test_printed_example(self):
        params = desk_scale_system(
            secure_geiger=(GeigerParams(0.25, 0.0),) * 4,
            fidelity=0.98, resend_mu=1.0,
        )
        probs = raw_click_probs(params, 1.0, 0)
        assert probs[2] == pytest.approx(1.0 - np.exp(-0.98 * 0.25 / 4.0), abs=1e-12)
        assert probs[2] == pytest.approx(0.05944, abs=5e-5)

    def test_alert_share(self, desk_system):
        probs_all_secure = raw_click_probs(desk_system, 1.0, 0)
        probs_half = raw_click_probs(desk_system, 0.5, 0)
        assert probs_all_secure[0] == pytest.approx(desk_system.alert_geiger[0].background)
        assert probs_half[0] > probs_all_secure[0]


def desk_scale_zero_mu(params):
    from dataclasses import replace

    return replace(params, resend_mu=0.0)


class TestQuantumRates:
    def test_dead_receiver(self):
        params = zero_system()
        report = quantum_attack_rates(params)
        assert report.alert_rate == 0.0
        assert report.sifted_rate == 0.0

    def test_errors_vanish_in_ideal_limit(self):
        params = desk_scale_system(
            fidelity=1.0,
            eve=EveMeasurementParams(mu=0.5, fidelity=1.0, efficiency=0.6),
            alert_geiger=(GeigerParams(0.22, 0.0), GeigerParams(0.24, 0.0)),
            secure_geiger=tuple(GeigerParams(e, 0.0) for e in (0.25, 0.24, 0.26, 0.23)),
        )
        report = quantum_attack_rates(params)
        # remaining errors stem only from incompatible-basis single clicks
        p_c, p_w, p_nc = outcome_probabilities(params.eve)
        assert p_w == 0.0
        assert report.qber < 2 * p_nc / p_c

    def test_fixed_vs_haar_average(self, desk_system):
        # Haar averaging is a proper average of the fixed-p evaluations
        lo = quantum_attack_rates(desk_system, p_alert=0.0)
        hi = quantum_attack_rates(desk_system, p_alert=1.0)
        mean = quantum_attack_rates(desk_system)
        assert min(lo.alert_rate, hi.alert_rate) <= mean.alert_rate <= max(lo.alert_rate, hi.alert_rate)

    def test_haar_average_matches_quadrature_of_fixed(self, desk_system):
        nodes, weights = np.polynomial.legendre.leggauss(48)
        acc = np.zeros(3)
        for x, w in zip(nodes, weights):
            p = 0.5 + 0.5 * x
            r = quantum_attack_rates(desk_system, p_alert=p)
            acc += 0.5 * w * np.array([r.alert_rate, r.sifted_rate, r.sifted_rate * r.qber])
        report = quantum_attack_rates(desk_system)
        assert report.alert_rate == pytest.approx(acc[0], rel=1e-9)
        assert report.sifted_rate == pytest.approx(acc[1], rel=1e-9)
        assert report.qber == pytest.approx(acc[2] / acc[1], rel=1e-8)


class TestHonestRates:
    def test_alert_is_background_only(self, desk_system):
        report = honest_rates(desk_system)
        c = desk_system.background
        assert report.alert_rate == pytest.approx(c[0] + c[1], abs=1e-12)

    def test_qber_tracks_infidelity(self):
        params = desk_scale_system(
            fidelity=0.95, source_mu=0.05,
            alert_geiger=(GeigerParams(1.0, 0.0), GeigerParams(1.0, 0.0)),
            secure_geiger=(GeigerParams(1.0, 0.0),) * 4,
        )
        report = honest_rates(params)
        assert report.qber == pytest.approx(0.05, rel=0.15)

    def test_switching_moves_background(self):
        params = desk_scale_system(switch_rate=0.5)
        report = honest_rates(params)
        c = params.background
        expected = 0.5 * (c[0] + c[1]) + 0.5 * c[2:].sum()
        assert report.alert_rate == pytest.approx(expected, abs=1e-12)


class TestBlindingRates:
    def test_below_threshold_silent(self, desk_system, gated_detectors):
        report = blinding_attack_rates(desk_system, gated_detectors, 0.1,
                                       DESK_BLINDING_POWER_MW)
        assert report.alert_rate == 0.0
        assert report.sifted_rate == 0.0

    def test_zero_energy_guard(self, desk_system, gated_detectors):
        report = blinding_attack_rates(desk_system, gated_detectors, 0.0,
                                       DESK_BLINDING_POWER_MW)
        assert report.alert_rate == 0.0

    def test_switch_half_equalizes_rates(self, gated_detectors, desk_blinding_regime):
        params = desk_scale_system(switch_rate=0.5)
        report = blinding_attack_rates(params, gated_detectors,
                                       DESK_PULSE_ENERGY_PJ, DESK_BLINDING_POWER_MW)
        assert report.alert_rate == pytest.approx(
            report.diagnostics["secure_trigger_rate"], abs=1e-12
        )

    def test_alert_at_least_half_secure(self, desk_system, gated_detectors):
        from polguard.analysis import resolve_blinding_thresholds

        never, _ = resolve_blinding_thresholds(gated_detectors, DESK_BLINDING_POWER_MW)
        assert np.max(never[:2]) < 2.0 * np.min(never[2:])  # dataset premise
        for e_t in np.linspace(0.5, 3.0, 40):
            report = blinding_attack_rates(desk_system, gated_detectors, e_t,
                                           DESK_BLINDING_POWER_MW)
            assert report.alert_rate >= 0.5 * report.diagnostics["secure_trigger_rate"] - 1e-12

    def test_alert_monotone_in_energy(self, desk_system, gated_detectors):
        rates = [
            blinding_attack_rates(desk_system, gated_detectors, e,
                                  DESK_BLINDING_POWER_MW).alert_rate
            for e in np.linspace(0.2, 4.0, 60)
        ]
        assert np.all(np.diff(rates) >= -1e-12)

    def test_qber_independent_of_attack_knobs(self, gated_detectors):
        p_c, p_w, _ = outcome_probabilities(desk_scale_system().eve)
        expected = p_w / (p_c + p_w)
        for e_t in (1.05, 1.15, 1.3):
            for r_sw in (0.0, 0.25, 0.5):
                params = desk_scale_system(switch_rate=r_sw)
                rep = blinding_attack_rates(params, gated_detectors, e_t,
                                            DESK_BLINDING_POWER_MW)
                assert rep.qber == pytest.approx(expected, abs=1e-15)

    def test_regime_diagnostic(self, desk_system, gated_detectors, desk_blinding_regime):
        lo, hi = desk_blinding_regime
        good = blinding_attack_rates(desk_system, gated_detectors,
                                     DESK_PULSE_ENERGY_PJ, DESK_BLINDING_POWER_MW)
        assert good.diagnostics["ramp_average_regime_ok"]
        bad = blinding_attack_rates(desk_system, gated_detectors, 0.9 * lo,
                                    DESK_BLINDING_POWER_MW)
        assert not bad.diagnostics["ramp_average_regime_ok"]

    def test_perfect_control(self, desk_system, gated_detectors):
        report = blinding_attack_rates(desk_system, gated_detectors,
                                       DESK_PULSE_ENERGY_PJ, DESK_BLINDING_POWER_MW,
                                       perfect_control=True)
        assert report.diagnostics["secure_trigger_rate"] == pytest.approx(1.0)


class TestWavelengthRates:
    @pytest.mark.parametrize("r_sw", (0.0, 0.1, 0.25, 1.0))
    def test_alert_equals_switch_rate(self, r_sw):
        report = wavelength_blinding_rates(desk_scale_system(switch_rate=r_sw))
        assert report.alert_rate == r_sw

    def test_full_switching_kills_key(self):
        report = wavelength_blinding_rates(desk_scale_system(switch_rate=1.0))
        assert report.sifted_rate == 0.0

    def test_ideal_fidelity_zero_qber(self):
        params = desk_scale_system(
            eve=EveMeasurementParams(mu=0.5, fidelity=1.0, efficiency=0.6)
        )
        assert wavelength_blinding_rates(params).qber == 0.0


class TestIntegratedRates:
    def _parts(self, params, detectors):
        return [
            quantum_attack_rates(params),
            blinding_attack_rates(params, detectors, DESK_PULSE_ENERGY_PJ,
                                  DESK_BLINDING_POWER_MW),
            wavelength_blinding_rates(params),
        ]

    def test_pure_weights_reduce_to_family(self, desk_system, gated_detectors):
        parts = self._parts(desk_system, gated_detectors)
        for i, w in enumerate(np.eye(3)):
            combo = integrated_attack_rates(parts, tuple(w))
            assert combo.alert_rate == pytest.approx(parts[i].alert_rate)
            assert combo.sifted_rate == pytest.approx(parts[i].sifted_rate)
            assert combo.qber == pytest.approx(parts[i].qber)

    def test_weight_validation(self, desk_system, gated_detectors):
        parts = self._parts(desk_system, gated_detectors)
        with pytest.raises(ValueError):
            integrated_attack_rates(parts, (0.5, 0.1, 0.1))

    def test_rates_in_range(self, gated_detectors):
        params = desk_scale_system(switch_rate=0.25)
        combo = integrated_attack_rates(self._parts(params, gated_detectors),
                                        (1 / 3, 1 / 3, 1 / 3))
        assert 0.0 <= combo.alert_rate <= 1.0
        assert 0.0 <= combo.qber <= 0.5


class TestReportValidation:
    def test_rejects_negative_rates(self):
        with pytest.raises(ValueError):
            RatesReport(attack="x", alert_rate=-0.1, sifted_rate=0.0, qber=0.0)

    def test_rejects_bad_provenance(self):
        with pytest.raises(ValueError):
            RatesReport(attack="x", alert_rate=0.0, sifted_rate=0.0, qber=0.0,
                        provenance="guess")


class TestSinusoidFit:
    def test_recovers_known_parameters(self):
        t = np.deg2rad(np.linspace(0, 180, 181))
        y = 2.0 + 1.2 * np.cos(4 * t - 0.7)
        fit = fit_fixed_period_sinusoid(t, y)
        assert fit["offset"] == pytest.approx(2.0, abs=1e-9)
        assert fit["amplitude"] == pytest.approx(1.2, abs=1e-9)
        assert fit["visibility"] == pytest.approx(0.6, abs=1e-9)
        assert fit["r_squared"] == pytest.approx(1.0, abs=1e-12)

    def test_noise_widens_confidence(self, rng):
        t = np.deg2rad(np.linspace(0, 180, 181))
        clean = 2.0 + 1.0 * np.cos(4 * t)
        noisy = clean + rng.normal(0, 0.05, t.size)
        fit = fit_fixed_period_sinusoid(t, noisy)
        assert fit["visibility"] == pytest.approx(0.5, abs=5 * fit["visibility_sigma"])
        assert fit["visibility_sigma"] > 0


class TestAlertLawConventions:
    def test_printed_alert_law_overcounts_physical_split(self):
        """The analytic alert click law assigns the matched-basis fidelity
        factor to both alert detectors; the physically split alternative
        (fidelity to the targeted detector, the remainder to its partner)
        is strictly smaller.  Both conventions are exposed (analysis vs
        protocol.bob_measurement); this pins the size of the gap so a
        change in either convention is caught."""
        mu_e, p_a, fid = 1.0, 0.5, 0.98
        for eta in (0.22, 0.24, 0.3):
            printed = 1.0 - 0.5 * (
                np.exp(-mu_e * p_a * fid * eta / 2.0)
                + np.exp(-mu_e * p_a * eta / 4.0)
            )
            physical = 1.0 - (
                0.25 * np.exp(-mu_e * p_a * fid * eta / 2.0)
                + 0.25 * np.exp(-mu_e * p_a * (1.0 - fid) * eta / 2.0)
                + 0.5 * np.exp(-mu_e * p_a * eta / 4.0)
            )
            assert printed > physical
            assert printed / physical == pytest.approx(1.48, abs=0.05)

    def test_bob_measurement_realizes_physical_split(self, rng):
        """Monte Carlo over the per-round measurement op reproduces the
        physically split alert click probability, not the printed law."""
        from polguard.detectors import GeigerParams
        from polguard.protocol import RoutingOutcome, bob_measurement

        eta, fid, mu = 0.3, 0.9, 4.0
        dets = [GeigerParams(efficiency=eta, background=0.0)] * 6
        routing = RoutingOutcome(p_alert=1.0, p_secure=0.0, window_fraction=0.5)
        n = 40_000
        clicks = sum(
            bob_measurement(routing, 0, dets, rng, mu=mu, fidelity=fid).d_a1
            + bob_measurement(routing, 0, dets, rng, mu=mu, fidelity=fid).d_a2
            for _ in range(n // 2)
        )
        physical = 2.0 - (
            0.5 * np.exp(-mu * 0.5 * fid * eta)
            + 0.5 * np.exp(-mu * 0.5 * (1.0 - fid) * eta)
            + np.exp(-mu * 0.5 * eta / 2.0)
        )
        se = np.sqrt(physical / n) * 2
        assert clicks / (n / 2) == pytest.approx(physical, abs=4 * se)
