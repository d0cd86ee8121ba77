import math

import pytest

from blochdd import (ConfigError, DesignSpec, NotConverged,
                     compute_coefficients, design, evaluate_waveform, phase)
from blochdd.propagator import waveform_max


def test_single_target_is_met_exactly():
    spec = DesignSpec(math.pi, 3, targets={"upsilon2": -0.2})
    shape, achieved = design(spec, seed=5, restarts=4)
    assert achieved.upsilon2 == pytest.approx(-0.2, abs=1e-6)
    check = compute_coefficients(shape)
    assert check.upsilon2 == pytest.approx(achieved.upsilon2, abs=1e-9)


def test_design_is_deterministic():
    spec = DesignSpec(math.pi, 3, targets={"upsilon": 0.0})
    a, _ = design(spec, seed=9, restarts=4)
    b, _ = design(spec, seed=9, restarts=4)
    assert a.coeffs == b.coeffs


def test_designed_shape_closes_the_rotation():
    spec = DesignSpec(math.pi / 2.0, 4, targets={"upsilon": 0.0})
    shape, _ = design(spec, seed=3, restarts=4)
    assert phase(shape, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert phase(shape, shape.tau_p) == pytest.approx(math.pi / 2.0)


def test_smoothness_class_pins_the_endpoints():
    spec = DesignSpec(math.pi, 4, smooth=1, targets={"upsilon": 0.0})
    shape, _ = design(spec, seed=4, restarts=4)
    assert shape.smooth == 1
    assert abs(evaluate_waveform(shape, 0.0)) < 1e-9
    assert abs(evaluate_waveform(shape, shape.tau_p)) < 1e-9


def test_two_targets_at_once():
    spec = DesignSpec(math.pi, 7, smooth=1,
                      targets={"upsilon": 0.0, "upsilon2": 0.0},
                      amp_bound=28.0)
    shape, achieved = design(spec, seed=202, restarts=6)
    assert abs(achieved.upsilon) < 1e-6
    assert abs(achieved.upsilon2) < 1e-6


def test_amplitude_bound_is_respected():
    spec = DesignSpec(math.pi, 5, targets={"upsilon": 0.0}, amp_bound=25.0)
    shape, _ = design(spec, seed=101, restarts=4)
    assert waveform_max(shape) <= 25.0 * 1.05


def test_spec_validation():
    with pytest.raises(ConfigError):
        DesignSpec(math.pi, 3, smooth=5)
    with pytest.raises(ConfigError):
        DesignSpec(math.pi, 0)
    with pytest.raises(ConfigError):
        DesignSpec(math.pi, 3, targets={"sigma": 0.0})


def test_unreachable_target_raises():
    spec = DesignSpec(math.pi, 2, targets={"upsilon": 5.0})
    with pytest.raises(NotConverged):
        design(spec, seed=1, restarts=2, maxiter=150)
