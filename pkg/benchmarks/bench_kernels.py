#!/usr/bin/env python3
"""Benchmark the compiled Monte Carlo kernels against the NumPy fallback.

Runs every simulation mode on both backends with the same seed, reports
rounds/second and the speedup, and verifies the tallies agree.

    python benchmarks/bench_kernels.py [--rounds N]
"""

import argparse
import time

import numpy as np

from polguard import _backend, simengine
from polguard.adversary import intercept_resend_preset
from polguard.datasets import desk_scale_attack, desk_scale_system, load_builtin_detectors


def scenarios(rounds):
    dets = load_builtin_detectors("correct", gate_variants=("gated",))
    sysp = desk_scale_system(switch_rate=0.25)
    for mode in ("honest", "intercept_resend", "quantum", "blinding",
                 "wavelength_blinding", "integrated"):
        if mode == "honest":
            attack = None
        elif mode == "intercept_resend":
            attack = intercept_resend_preset()
        else:
            attack = desk_scale_attack(mode)
        yield simengine.Scenario(
            mode=mode, system=sysp, attack=attack,
            detectors=dets if mode in ("blinding", "integrated") else None,
            rounds=rounds, seed=1,
        )


def time_backend(module, scenario):
    params, knots = simengine.build_kernel_params(scenario)
    mode = simengine.MODE_IDS[scenario.mode]
    bitgen = np.random.Philox(key=scenario.seed)
    t0 = time.perf_counter()
    out = module.run_rounds(mode, scenario.rounds, bitgen, params, knots)
    return time.perf_counter() - t0, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rounds", type=int, default=1_000_000)
    args = parser.parse_args()

    try:
        compiled = _backend.get_kernel_module("compiled")
    except ImportError:
        raise SystemExit("compiled backend not built; reinstall with a C toolchain")
    python = _backend.get_kernel_module("python")

    print(f"{args.rounds:,} rounds per mode\n")
    print(f"{'mode':<22}{'compiled':>12}{'python':>12}{'speedup':>10}{'match':>8}")
    for sc in scenarios(args.rounds):
        t_c, out_c = time_backend(compiled, sc)
        t_p, out_p = time_backend(python, sc)
        match = "yes" if np.array_equal(out_c, out_p) else "NO"
        print(f"{sc.mode:<22}{sc.rounds / t_c:>10.0f}/s{sc.rounds / t_p:>10.0f}/s"
              f"{t_p / t_c:>9.1f}x{match:>8}")


if __name__ == "__main__":
    main()
