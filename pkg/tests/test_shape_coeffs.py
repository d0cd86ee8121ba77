import math

import numpy as np
import pytest

from blochdd import (AsymmetricPulse, PulseShape, QuadratureNotConverged,
                     ShapeCoefficients, catalogue_lookup,
                     compute_coefficients, delta_coefficients,
                     load_reference_table, make_delta, table_csv_rows)
from blochdd import shape_coeffs
from blochdd.shape_coeffs import double_average, pulse_average


def _delta_expected(phi0):
    return {
        "upsilon": math.cos(phi0 / 2.0),
        "upsilon2": math.cos(phi0),
        "alpha": math.sin(phi0) / 4.0,
        "alpha2": math.sin(2.0 * phi0) / 4.0,
        "zeta": math.sin(phi0 / 2.0) / 4.0,
        "zeta2": math.sin(phi0) / 4.0,
        "mu": math.sin(1.5 * phi0) / 4.0,
    }


@pytest.mark.parametrize("phi0", [math.pi, math.pi / 2.0, 0.7, 2.3])
def test_delta_closed_forms(phi0):
    got = delta_coefficients(phi0).as_dict()
    for key, want in _delta_expected(phi0).items():
        assert got[key] == pytest.approx(want, abs=1e-12), key


def test_compute_dispatches_delta():
    a = compute_coefficients(make_delta(math.pi)).as_dict()
    b = delta_coefficients(math.pi).as_dict()
    assert a == b


def test_pulse_average_basics():
    assert pulse_average(lambda t: np.ones_like(t)) == pytest.approx(1.0)
    assert pulse_average(lambda t: t) == pytest.approx(0.5)
    assert pulse_average(lambda t: t, tau_p=2.0) == pytest.approx(1.0)


def test_double_average_basics():
    # triangle 0 <= t' <= t <= 1 has area 1/2
    assert double_average(lambda t, tp: np.ones_like(t)) == pytest.approx(0.5)
    assert double_average(lambda t, tp: t * 0 + tp) == pytest.approx(1.0 / 6.0)


def test_quadrature_guard_on_rough_integrand():
    with pytest.raises(QuadratureNotConverged):
        pulse_average(lambda t: np.cos(500.0 * t), nodes=4)
    with pytest.raises(QuadratureNotConverged):
        double_average(lambda t, tp: np.cos(300.0 * t * tp), nodes=4)


def test_coefficient_refinement_guard():
    shape = PulseShape("fourier", math.pi, coeffs=(0.5, -0.4, 0.3, -0.2, 0.25))
    with pytest.raises(QuadratureNotConverged):
        compute_coefficients(shape, tol=1e-16, nodes=3)


def test_asymmetric_pulse_is_rejected(monkeypatch):
    shape = PulseShape("fourier", math.pi, coeffs=(0.5, 0.2))

    def skewed(s, t):
        return np.asarray(t, dtype=float)

    monkeypatch.setattr(shape_coeffs.pulse_shapes, "evaluate_waveform", skewed)
    with pytest.raises(AsymmetricPulse):
        compute_coefficients(shape)


def test_coefficients_stay_bounded_for_random_shapes():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = rng.integers(1, 5)
        coeffs = (0.5,) + tuple(rng.normal(scale=0.5, size=n))
        c = compute_coefficients(PulseShape("fourier", math.pi, coeffs=coeffs),
                                 tol=1e-8)
        for key, value in c.as_dict().items():
            assert abs(value) <= 1.0 + 1e-9, (key, coeffs)


def test_table_row_halves_the_double_coefficients():
    c = compute_coefficients(make_delta(math.pi / 2.0))
    row = c.table_row()
    assert row["alpha_half"] == pytest.approx(c.alpha / 2.0)
    assert row["alpha2_half"] == pytest.approx(c.alpha2 / 2.0)
    assert row["zeta"] == pytest.approx(c.zeta)


def test_reference_table_contents():
    rows = load_reference_table()
    names = {r["name"] for r in rows}
    assert {"delta_pi", "G_0.10_pi", "F1", "W21_pi2"} <= names
    by_name = {r["name"]: r for r in rows}
    assert by_name["W11_pi"]["status"] != "ok"
    assert by_name["G_0.10_pi"]["status"] == "ok"
    assert by_name["G_0.10_pi"]["phi0"] == pytest.approx(math.pi)


def test_computed_rows_skip_corrupted_sources():
    names = [r["name"] for r in table_csv_rows()]
    assert "W11_pi" not in names
    assert "W21_pi2" in names


def test_gaussian_matches_reference_row():
    row = next(r for r in load_reference_table() if r["name"] == "G_0.10_pi")
    got = compute_coefficients(catalogue_lookup("G_0.10_pi")).table_row()
    for key, want in row["values"].items():
        assert got[key] == pytest.approx(want, abs=5e-4), key


def test_coefficients_as_dict_is_complete():
    c = ShapeCoefficients(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
    assert set(c.as_dict()) == {"upsilon", "upsilon2", "alpha", "alpha2",
                                "zeta", "zeta2", "mu"}
