import math

import numpy as np
import pytest

from blochdd import (DeltaNotPointwise, OutOfRange, PulseShape, UnknownShape,
                     catalogue, catalogue_lookup, evaluate_waveform,
                     make_delta, phase, symmetrized_angle)
from blochdd.pulse_shapes import parse_registry, sample_times


def test_delta_has_no_pointwise_value():
    shape = make_delta(math.pi)
    assert shape.kind == "delta"
    with pytest.raises(DeltaNotPointwise):
        evaluate_waveform(shape, 0.3)


def test_delta_phase_steps_at_midpoint():
    shape = make_delta(math.pi)
    assert phase(shape, 0.0) == 0.0
    assert phase(shape, 0.49) == 0.0
    assert phase(shape, 0.51) == pytest.approx(math.pi)
    assert phase(shape, 1.0) == pytest.approx(math.pi)


@pytest.mark.parametrize("name", ["G_0.10_pi", "G_0.01_pi2", "F1", "W21_pi"])
def test_finite_shapes_accumulate_phi0(name):
    shape = catalogue_lookup(name)
    assert phase(shape, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert phase(shape, shape.tau_p) == pytest.approx(shape.phi0, rel=1e-9)


@pytest.mark.parametrize("name", ["G_0.10_pi", "F1", "W21_pi", "W22_pi"])
def test_finite_shapes_are_midpoint_symmetric(name):
    shape = catalogue_lookup(name)
    t = sample_times(shape, 200)
    v = evaluate_waveform(shape, t)
    assert np.max(np.abs(v - v[::-1])) <= 1e-9 * np.max(np.abs(v))


def test_symmetrized_angle_is_odd_about_midpoint():
    shape = catalogue_lookup("G_0.10_pi")
    t = np.linspace(0.0, 1.0, 101)
    s = symmetrized_angle(shape, t)
    assert np.max(np.abs(s + s[::-1])) < 1e-9


def test_smooth_class_fixes_endpoint_values():
    # smooth = 1 registry shapes start and end at zero field, up to the
    # precision of the transcribed coefficients (six decimals)
    for name in ("F1", "W21_pi", "W31_pi"):
        shape = catalogue_lookup(name)
        assert shape.smooth >= 1
        assert abs(evaluate_waveform(shape, 0.0)) < 1e-4
        assert abs(evaluate_waveform(shape, shape.tau_p)) < 1e-4


def test_waveform_rejects_out_of_range_times():
    shape = catalogue_lookup("G_0.10_pi")
    with pytest.raises(OutOfRange):
        evaluate_waveform(shape, -0.2)
    with pytest.raises(OutOfRange):
        phase(shape, 1.2)


def test_fourier_a0_must_match_phi0():
    with pytest.raises(ValueError):
        PulseShape("fourier", math.pi, coeffs=(0.3, 0.1))
    ok = PulseShape("fourier", math.pi, coeffs=(0.5, 0.1))
    assert ok.phi0 == pytest.approx(2.0 * math.pi * ok.coeffs[0])


def test_shape_validation():
    with pytest.raises(UnknownShape):
        PulseShape("triangle", math.pi)
    with pytest.raises(ValueError):
        PulseShape("gaussian", math.pi, width=-0.1)
    with pytest.raises(ValueError):
        PulseShape("fourier", math.pi, coeffs=())


def test_with_phi0_rescales_waveform():
    shape = catalogue_lookup("F1")
    half = shape.with_phi0(math.pi / 2.0)
    t = np.linspace(0.0, 1.0, 33)
    assert np.allclose(evaluate_waveform(half, t),
                       0.5 * np.asarray(evaluate_waveform(shape, t)))


def test_registry_contents_and_aliases():
    reg = catalogue()
    for name in ("G_0.01_pi", "G_0.10_pi", "F1", "W11_pi", "W21_pi2"):
        assert name in reg
    assert catalogue_lookup("G001_pi") is catalogue_lookup("G_0.01_pi")
    with pytest.raises(UnknownShape):
        catalogue_lookup("nope")


def test_corruption_and_restoration_flags():
    assert catalogue_lookup("W11_pi").is_corrupted
    assert not catalogue_lookup("W12_pi").is_corrupted
    assert "sign_restored" in catalogue_lookup("W11_pi2").flags


def test_parse_registry_error_lines():
    with pytest.raises(ValueError, match="registry line"):
        parse_registry("bad 3.14\n")
    with pytest.raises(ValueError, match="gaussian needs one width"):
        parse_registry("g pi gaussian\n")
    with pytest.raises(UnknownShape, match="unknown kind"):
        parse_registry("t pi triangle 0.3\n")
