"""Acceptance suite: one test per release criterion, at the stated
tolerances and sample sizes.  Each criterion prints a PASS line on success
(run with ``pytest tests/test_acceptance.py -s`` to see them); a failed
assertion marks the criterion FAIL via the test outcome.
"""

import json
import time
from dataclasses import replace

import numpy as np
import pytest

from polguard import analysis, qmath, simengine
from polguard.adversary import (
    EveSourceConfig,
    intercept_resend_preset,
    polarization_purity,
)
from polguard.analysis import visibility_sweep
from polguard.datasets import (
    DESK_BLINDING_POWER_MW,
    DESK_PULSE_ENERGY_PJ,
    desk_scale_attack,
    desk_scale_system,
    load_builtin_detectors,
)
from polguard.detectors import audit_assignment
from polguard.protocol import BB84_PHASES, PhotonRound, genuine_roundtrip
from polguard.simengine import Scenario, run

BENCH_PURITIES = (1.0, 0.78, 0.63, 0.53, 0.5)
BENCH_THETA1_DEG = (0.0, 10.4, 15.0, 18.9, 22.5)


def _report(name: str):
    print(f"\nACCEPTANCE {name}: PASS")


def _within(mc, se, ref, sigmas=3.0):
    return abs(mc - ref) <= sigmas * se


class TestAcceptance:
    def test_genuine_photon_immunity(self, rng):
        """1e5 Haar randomizers x 4 phases: p_alert < 1e-10, under 10 s."""
        t0 = time.perf_counter()
        n = 100_000
        # vectorized evaluation of T.T J T acting on |H>, per randomizer
        us = qmath.haar_random_unitaries(rng, n)
        m = np.einsum("nji,jk,nkl->nil", us, qmath.J_MIRROR, us)
        out = m[:, :, 0]  # roundtrip operator applied to |H>
        p_alert = (np.abs(out[:, 0]) ** 2) / (np.abs(out[:, 0]) ** 2 + np.abs(out[:, 1]) ** 2)
        worst = float(p_alert.max())
        # object-level spot check across the four encoding phases
        for phase in BB84_PHASES:
            for _ in range(50):
                r = PhotonRound(alice_phase=phase, randomizer=qmath.haar_random_unitary(rng),
                                channel=qmath.haar_random_unitary(rng))
                worst = max(worst, genuine_roundtrip(r).p_alert)
        elapsed = time.perf_counter() - t0
        assert worst < 1e-10, f"worst p_alert {worst}"
        assert elapsed < 10.0, f"took {elapsed:.1f} s"
        _report(f"genuine-photon immunity (worst p_alert {worst:.2e}, {elapsed:.1f} s)")

    def test_intercept_resend_quarter_rates(self):
        """Intercept-resend preset: alert and key QBER both 0.25 +- 0.003 at 1e6."""
        t0 = time.perf_counter()
        sc = Scenario(mode="intercept_resend", system=desk_scale_system(),
                      attack=intercept_resend_preset(), rounds=1_000_000, seed=2024)
        res = run(sc)
        elapsed = time.perf_counter() - t0
        assert abs(res.report.alert_rate - 0.25) <= 0.003, res.report.alert_rate
        assert abs(res.report.qber - 0.25) <= 0.003, res.report.qber
        assert elapsed < 120.0, f"took {elapsed:.1f} s"
        _report(
            "25% alert and QBER reproduction "
            f"(alert {res.report.alert_rate:.4f}, qber {res.report.qber:.4f}, {elapsed:.1f} s)"
        )

    @pytest.mark.parametrize("purity", BENCH_PURITIES)
    def test_overlap_bounds_brute_force(self, rng, purity):
        """1e6-draw Haar extremes match (1 +- sqrt(2P-1))/2 within 1e-3 and
        never exceed the bounds by more than 1e-9."""
        hi, lo = qmath.overlap_bounds(purity)
        lam = hi
        rho = qmath.mixed_state(lam, qmath.KET_D)
        samples = qmath.sample_conjugated_overlaps(rng, rho, qmath.KET_H, 1_000_000)
        assert abs(samples.max() - hi) <= 1e-3
        assert abs(samples.min() - lo) <= 1e-3
        assert samples.max() <= hi + 1e-9
        assert samples.min() >= lo - 1e-9
        _report(f"overlap bounds at purity {purity} "
                f"(max gap {abs(samples.max() - hi):.1e})")

    def test_purity_from_bench_angles(self):
        """Source purities at the five bench angles match the printed values."""
        for deg, target in zip(BENCH_THETA1_DEG, BENCH_PURITIES):
            p = polarization_purity(np.deg2rad(deg))
            assert abs(p - target) <= 0.005 + 1e-12, (deg, p, target)
        _report("purity-from-angle table")

    @pytest.mark.parametrize("deg", BENCH_THETA1_DEG)
    def test_visibility_law(self, deg):
        """Fitted sweep visibility equals sqrt(2P-1) within 1e-2 per preset."""
        source = EveSourceConfig(theta1=np.deg2rad(deg), pulse_energy_pj=1.0)
        sweep = visibility_sweep(np.deg2rad(np.linspace(0.0, 180.0, 181)), source)
        vis = sweep["fit"]["visibility"]
        expected = sweep["expected_visibility"]
        assert abs(vis - expected) <= 1e-2, (deg, vis, expected)
        _report(f"visibility law at theta1={deg} deg "
                f"(fit {vis:.4f} vs {expected:.4f})")

    def test_audit_verdicts(self):
        """Correct assignment audits secure; swapped audits insecure."""
        correct = audit_assignment(load_builtin_detectors("correct"))
        swapped = audit_assignment(load_builtin_detectors("swapped"))
        assert correct.secure
        assert not swapped.secure
        assert len(swapped.violations) >= 1
        _report(f"audit verdicts (swapped violations: {len(swapped.violations)})")

    def test_blinding_rate_relations(self, gated_detectors, desk_blinding_regime):
        """Blinding: MC vs analytic within 3 sigma at 1e6; alert at least half
        the secure trigger rate on the premise-satisfying dataset; switching
        at one half equalizes the analytic rates to 1e-12."""
        from polguard.analysis import resolve_blinding_thresholds

        never, _ = resolve_blinding_thresholds(gated_detectors, DESK_BLINDING_POWER_MW)
        assert np.max(never[:2]) < 2.0 * np.min(never[2:]), "dataset premise"

        sysp = desk_scale_system()
        analytic = analysis.blinding_attack_rates(
            sysp, gated_detectors, DESK_PULSE_ENERGY_PJ, DESK_BLINDING_POWER_MW)
        assert analytic.diagnostics["ramp_average_regime_ok"]
        res = run(Scenario(mode="blinding", system=sysp,
                           attack=desk_scale_attack("blinding"),
                           detectors=gated_detectors, rounds=1_000_000, seed=41))
        rep = res.report
        assert _within(rep.alert_rate, rep.alert_se, analytic.alert_rate), "alert"
        assert _within(rep.sifted_rate, rep.sifted_se, analytic.sifted_rate), "sifted"
        assert _within(rep.qber, rep.qber_se, analytic.qber), "qber"

        secure_rate = analytic.diagnostics["secure_trigger_rate"]
        assert analytic.alert_rate >= 0.5 * secure_rate - 1e-12
        # empirical counterpart: secure trigger rate = sifted / P(conclusive)
        from polguard.adversary import outcome_probabilities

        p_c, p_w, _ = outcome_probabilities(sysp.eve)
        mc_secure = rep.sifted_rate / (p_c + p_w)
        mc_secure_se = rep.sifted_se / (p_c + p_w)
        assert rep.alert_rate >= 0.5 * mc_secure - 3.0 * np.hypot(
            rep.alert_se, 0.5 * mc_secure_se
        )
        half = analysis.blinding_attack_rates(
            desk_scale_system(switch_rate=0.5), gated_detectors,
            DESK_PULSE_ENERGY_PJ, DESK_BLINDING_POWER_MW)
        assert abs(half.alert_rate - half.diagnostics["secure_trigger_rate"]) <= 1e-12
        _report(
            "blinding rate relations "
            f"(alert {rep.alert_rate:.4f} vs {analytic.alert_rate:.4f}, "
            f"alert/secure {analytic.alert_rate / secure_rate:.3f})"
        )

    def test_wavelength_rates(self):
        """Wavelength attack: exact closed forms and 3 sigma MC agreement."""
        from polguard.adversary import outcome_probabilities

        sysp = desk_scale_system(switch_rate=0.25)
        analytic = analysis.wavelength_blinding_rates(sysp)
        p_c, p_w, _ = outcome_probabilities(sysp.eve)
        assert analytic.alert_rate == sysp.switch_rate
        assert analytic.sifted_rate == pytest.approx(
            (p_c + p_w) * (1.0 - sysp.switch_rate), abs=1e-15)
        assert analytic.qber == pytest.approx(p_w / (p_c + p_w), abs=1e-15)
        res = run(Scenario(mode="wavelength_blinding", system=sysp,
                           attack=desk_scale_attack("wavelength_blinding"),
                           rounds=1_000_000, seed=43))
        rep = res.report
        assert _within(rep.alert_rate, rep.alert_se, analytic.alert_rate)
        assert _within(rep.sifted_rate, rep.sifted_se, analytic.sifted_rate)
        assert _within(rep.qber, rep.qber_se, analytic.qber)
        _report(f"wavelength-attack rates (alert {rep.alert_rate:.4f} vs "
                f"{analytic.alert_rate:.4f})")

    def test_quantum_and_integrated_cross_validation(self, gated_detectors,
                                                     desk_blinding_regime):
        """Desk-scale quantum and integrated attacks: all three rates within
        3 sigma of the closed forms at 1e6 rounds."""
        sysp = desk_scale_system()
        analytic_q = analysis.quantum_attack_rates(sysp)
        res_q = run(Scenario(mode="quantum", system=sysp,
                             attack=desk_scale_attack("quantum"),
                             rounds=1_000_000, seed=47))
        for field, se_field in (("alert_rate", "alert_se"),
                                ("sifted_rate", "sifted_se"), ("qber", "qber_se")):
            mc = getattr(res_q.report, field)
            se = getattr(res_q.report, se_field)
            assert _within(mc, se, getattr(analytic_q, field)), ("quantum", field)

        sysp_i = desk_scale_system(switch_rate=0.25)
        atk = desk_scale_attack("integrated")
        analytic_i = analysis.integrated_attack_rates(
            [
                analysis.quantum_attack_rates(sysp_i),
                analysis.blinding_attack_rates(sysp_i, gated_detectors,
                                               DESK_PULSE_ENERGY_PJ,
                                               DESK_BLINDING_POWER_MW),
                analysis.wavelength_blinding_rates(sysp_i),
            ],
            atk.weights,
        )
        res_i = run(Scenario(mode="integrated", system=sysp_i, attack=atk,
                             detectors=gated_detectors, rounds=1_000_000, seed=53))
        for field, se_field in (("alert_rate", "alert_se"),
                                ("sifted_rate", "sifted_se"), ("qber", "qber_se")):
            mc = getattr(res_i.report, field)
            se = getattr(res_i.report, se_field)
            assert _within(mc, se, getattr(analytic_i, field)), ("integrated", field)
        _report(
            "analytic-MC cross validation: quantum "
            f"(alert {res_q.report.alert_rate:.4f} vs {analytic_q.alert_rate:.4f}) "
            f"and integrated (alert {res_i.report.alert_rate:.4f} vs "
            f"{analytic_i.alert_rate:.4f})"
        )

    @pytest.mark.parametrize("workers", [1, 3])
    def test_determinism(self, tmp_path, gated_detectors, workers):
        """Identical (seed, workers) reruns are bit-identical."""
        sc = Scenario(mode="integrated", system=desk_scale_system(switch_rate=0.25),
                      attack=desk_scale_attack("integrated"),
                      detectors=gated_detectors, rounds=120_000, seed=59,
                      workers=workers)
        r1, r2 = run(sc), run(sc)
        assert r1.equivalent(r2)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        simengine.write_result_json(p1, r1, include_timing=False)
        simengine.write_result_json(p2, r2, include_timing=False)
        assert p1.read_bytes() == p2.read_bytes()
        _report(f"determinism with workers={workers}")
