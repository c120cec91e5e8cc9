import numpy as np
import pytest

from polguard import adversary, qmath
from polguard.adversary import (
    AttackConfig,
    EveMeasurementParams,
    EveOutcome,
    EveSourceConfig,
    eve_measurement_outcome,
    eve_source_state,
    intercept_resend_preset,
    outcome_probabilities,
    polarization_purity,
    theta1_for_purity,
)

BENCH_ANGLES_DEG = (0.0, 10.4, 15.0, 18.9, 22.5)
BENCH_PURITIES = (1.0, 0.78, 0.63, 0.53, 0.5)


class TestSourceState:
    @pytest.mark.parametrize("deg,purity", list(zip(BENCH_ANGLES_DEG, BENCH_PURITIES)))
    def test_purity_at_bench_angles(self, deg, purity):
        pol, _ = eve_source_state(EveSourceConfig(theta1=np.deg2rad(deg)))
        assert pol.purity == pytest.approx(purity, abs=0.005 + 1e-12)

    def test_purity_formula_exact(self):
        theta = np.deg2rad(10.4)
        pol, _ = eve_source_state(EveSourceConfig(theta1=theta))
        assert pol.purity == pytest.approx(polarization_purity(theta), abs=1e-12)
        assert polarization_purity(theta) == pytest.approx(0.7797, abs=2e-4)

    def test_purity_invariant_under_rotation_stage(self, rng):
        theta1 = np.deg2rad(15.0)
        base = eve_source_state(EveSourceConfig(theta1=theta1))[0].purity
        for _ in range(20):
            cfg = EveSourceConfig(
                theta1=theta1,
                theta2=rng.uniform(0, np.pi),
                qwp_angle=rng.uniform(-np.pi, np.pi),
            )
            assert eve_source_state(cfg)[0].purity == pytest.approx(base, abs=1e-12)

    def test_timebin_part_phase_encoded(self):
        _, tb = eve_source_state(EveSourceConfig(phi_e=np.pi / 2))
        a_l, a_s = tb.amplitudes
        assert a_l == pytest.approx(1 / np.sqrt(2))
        assert a_s == pytest.approx(1j / np.sqrt(2))

    def test_theta1_inverse(self):
        for p in np.linspace(0.5, 1.0, 21):
            assert polarization_purity(theta1_for_purity(p)) == pytest.approx(p, abs=1e-12)


class TestVisibilityLaw:
    @pytest.mark.parametrize("deg", BENCH_ANGLES_DEG)
    def test_sweep_visibility_matches_purity(self, deg):
        from polguard.analysis import visibility_sweep

        source = EveSourceConfig(theta1=np.deg2rad(deg), pulse_energy_pj=1.0)
        sweep = visibility_sweep(np.deg2rad(np.linspace(0, 180, 181)), source)
        fit = sweep["fit"]
        assert fit["visibility"] == pytest.approx(sweep["expected_visibility"], abs=1e-6)
        if sweep["expected_visibility"] > 1e-3:
            assert fit["r_squared"] > 1.0 - 1e-9

    def test_energy_curves_span_overlap_interval(self):
        from polguard.analysis import visibility_sweep

        source = EveSourceConfig(theta1=0.0, pulse_energy_pj=2.0)
        sweep = visibility_sweep(np.deg2rad(np.linspace(0, 180, 721)), source)
        # pure trigger: the alert-side energy sweeps the full 0 .. E_T/2 range
        assert sweep["e_alert_pj"].min() == pytest.approx(0.0, abs=1e-9)
        assert sweep["e_alert_pj"].max() == pytest.approx(1.0, abs=1e-6)


class TestMeasurementOutcomes:
    def test_vacuum_always_inconclusive(self, rng):
        params = EveMeasurementParams(mu=0.0, fidelity=0.9, efficiency=0.5)
        for _ in range(50):
            outcome, phase = eve_measurement_outcome(params, rng, 0)
            assert outcome == EveOutcome.INCONCLUSIVE and phase is None

    def test_printed_values(self):
        p_c, p_w, _ = outcome_probabilities(
            EveMeasurementParams(mu=0.1, fidelity=0.99, efficiency=0.2)
        )
        assert p_c == pytest.approx(0.009800, abs=5e-6)
        assert p_w == pytest.approx(9.8e-5, abs=5e-7)

    def test_perfect_fidelity_never_wrong(self):
        _, p_w, _ = outcome_probabilities(
            EveMeasurementParams(mu=0.4, fidelity=1.0, efficiency=0.7)
        )
        assert p_w == 0.0

    def test_probabilities_sum_below_one(self):
        for mu in (0.05, 0.5, 2.0, 20.0):
            p_c, p_w, p_nc = outcome_probabilities(
                EveMeasurementParams(mu=mu, fidelity=0.95, efficiency=0.8)
            )
            assert 0.0 < p_c + p_w + 2 * p_nc <= 1.0

    def test_empirical_matches_closed_form(self, rng):
        params = EveMeasurementParams(mu=0.5, fidelity=0.98, efficiency=0.6)
        p_c, p_w, p_nc = outcome_probabilities(params)
        n = 1_000_000
        counts = np.zeros(4)
        for _ in range(n):
            outcome, _ = eve_measurement_outcome(params, rng, 2)
            counts[outcome] += 1
        for observed, expected in zip(counts / n, (p_c, p_w, 2 * p_nc)):
            se = np.sqrt(expected * (1 - expected) / n)
            assert observed == pytest.approx(expected, abs=4 * se)

    def test_phase_mapping(self, rng):
        params = EveMeasurementParams(mu=5.0, fidelity=0.9, efficiency=1.0)
        for _ in range(500):
            outcome, phase = eve_measurement_outcome(params, rng, 1)
            if outcome == EveOutcome.CORRECT:
                assert phase == 1
            elif outcome == EveOutcome.WRONG:
                assert phase == 0
            elif outcome == EveOutcome.INCOMPATIBLE:
                assert phase in (2, 3)
            else:
                assert phase is None


class TestAttackConfig:
    def test_integrated_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            AttackConfig(kind="integrated", weights=(0.5, 0.2, 0.2))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            AttackConfig(kind="sidechannel")

    def test_trigger_purity_roundtrip(self):
        cfg = AttackConfig(kind="blinding").with_purity(0.63)
        assert cfg.trigger_purity == pytest.approx(0.63, abs=1e-12)
        assert cfg.trigger_state.purity == pytest.approx(0.63, abs=1e-12)

    def test_intercept_preset_is_ideal(self):
        cfg = intercept_resend_preset()
        assert cfg.measurement.fidelity == 1.0
        assert cfg.measurement.efficiency == 1.0
        assert cfg.source.purity == 1.0

    def test_blinding_state_purity(self):
        cfg = AttackConfig(kind="blinding", blinding_purity=0.7)
        assert cfg.blinding_state.purity == pytest.approx(0.7, abs=1e-12)


class TestRoundExecutors:
    def test_quantum_forwards_only_on_clicks(self, rng):
        from polguard.adversary import run_quantum_attack
        from polguard.datasets import desk_scale_attack

        atk = desk_scale_attack("quantum")
        p_c, p_w, p_nc = outcome_probabilities(atk.measurement)
        n = 50_000
        pulses = [run_quantum_attack(atk, rng, 0) for _ in range(n)]
        sent = [p for p in pulses if p is not None]
        expected = p_c + p_w + 2 * p_nc
        se = np.sqrt(expected * (1 - expected) / n)
        assert len(sent) / n == pytest.approx(expected, abs=4 * se)
        assert all(p.mean_photon_number == atk.resend_mu for p in sent)
        assert all(p.polarization.purity == pytest.approx(1.0) for p in sent)

    def test_quantum_correct_outcome_keeps_phase(self, rng):
        from polguard.adversary import run_quantum_attack
        from polguard.datasets import desk_scale_attack
        from polguard.protocol import phase_basis

        atk = desk_scale_attack("quantum")
        phases = [run_quantum_attack(atk, rng, 2) for _ in range(20_000)]
        sent = [p.phase_k for p in phases if p is not None]
        # compatible-basis resends dominate and carry Alice's basis
        compatible = [k for k in sent if phase_basis(k) == 1]
        assert len(compatible) > 0.5 * len(sent)

    def test_blinding_matches_analytic_trigger_rate(self, rng, gated_detectors,
                                                    desk_blinding_regime):
        from polguard import analysis, qmath
        from polguard.adversary import run_blinding_attack
        from polguard.datasets import (DESK_BLINDING_POWER_MW,
                                       DESK_PULSE_ENERGY_PJ, desk_scale_attack,
                                       desk_scale_system)

        atk = desk_scale_attack("blinding")
        p_c, p_w, p_nc = outcome_probabilities(atk.measurement)
        p_send = p_c + p_w + 2 * p_nc
        n = 40_000
        alerts = 0
        for _ in range(n):
            u = qmath.haar_random_unitary(rng)
            rec = run_blinding_attack(atk, gated_detectors, u, rng,
                                      int(rng.random() * 4))
            alerts += int(rec.d_a1) + int(rec.d_a2)
        analytic = analysis.blinding_attack_rates(
            desk_scale_system(), gated_detectors,
            DESK_PULSE_ENERGY_PJ, DESK_BLINDING_POWER_MW)
        per_trigger = alerts / (n * p_send)
        se = np.sqrt(analytic.alert_rate / (n * p_send))
        assert per_trigger == pytest.approx(analytic.alert_rate, abs=4 * se)

    def test_blinding_silent_without_trigger_energy(self, rng, gated_detectors):
        from dataclasses import replace

        from polguard import qmath
        from polguard.adversary import run_blinding_attack
        from polguard.datasets import desk_scale_attack

        atk = desk_scale_attack("blinding")
        atk = replace(atk, source=replace(atk.source, pulse_energy_pj=0.01))
        for _ in range(300):
            rec = run_blinding_attack(atk, gated_detectors,
                                      qmath.haar_random_unitary(rng), rng, 0)
            assert not rec.alert and not any(rec.secure_clicks)

    def test_wavelength_alert_iff_switch(self, rng):
        from polguard.adversary import run_wavelength_blinding_attack
        from polguard.datasets import desk_scale_attack

        atk = desk_scale_attack("wavelength_blinding")
        for _ in range(200):
            assert run_wavelength_blinding_attack(atk, rng, 0, True).alert
            assert not run_wavelength_blinding_attack(atk, rng, 0, False).alert
