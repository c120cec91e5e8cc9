import numpy as np
import pytest

from polguard.datasets import (
    DESK_BLINDING_POWER_MW,
    DESK_PULSE_ENERGY_PJ,
    desk_scale_attack,
    desk_scale_system,
    load_builtin_detectors,
)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def desk_system():
    return desk_scale_system()


@pytest.fixture(scope="session")
def gated_detectors():
    return load_builtin_detectors("correct", gate_variants=("gated",))


@pytest.fixture(scope="session")
def all_detectors():
    return load_builtin_detectors("correct")


@pytest.fixture(scope="session")
def swapped_detectors():
    return load_builtin_detectors("swapped")


def pull(mc_value, mc_se, analytic_value):
    """Standardized deviation of a Monte Carlo estimate from its prediction."""
    if mc_se == 0:
        return 0.0 if mc_value == analytic_value else float("inf")
    return abs(mc_value - analytic_value) / mc_se


@pytest.fixture(scope="session")
def desk_blinding_regime(gated_detectors):
    """Verify the documented desk-scale trigger energy sits in the exact
    ramp-average regime of the gated dataset (the analytic forms are exact
    there); returns the bounds for reuse."""
    from polguard.analysis import resolve_blinding_thresholds

    never, always = resolve_blinding_thresholds(gated_detectors, DESK_BLINDING_POWER_MW)
    lo = max(2.0 * always[:2].max(), 4.0 * always[2:].max())
    hi = min(4.0 * never[:2].min(), 8.0 * never[2:].min())
    assert lo < DESK_PULSE_ENERGY_PJ < hi, (
        f"desk-scale pulse energy {DESK_PULSE_ENERGY_PJ} outside exact regime ({lo}, {hi})"
    )
    return lo, hi
