import math
import warnings

import numpy as np
import pytest

from blochdd import (QuadratureNotConverged, RateModel, UnsupportedCase,
                     analytic_gamma0, build_generator, catalogue_sequence,
                     compute_coefficients, cumulants, make_delta)
from blochdd.magnus import ANALYTIC_CASES, interaction_generator


def test_interaction_generator_starts_at_lab_frame(generic_model):
    seq = catalogue_sequence("4p", make_delta(math.pi))
    assert np.allclose(interaction_generator(seq, generic_model, 0.0),
                       build_generator(generic_model))


def test_hard_inversion_average_matches_closed_form(generic_model):
    seq = catalogue_sequence("2a", make_delta(math.pi))
    got = cumulants(seq, generic_model)
    want = analytic_gamma0("hard_pi_x", generic_model)
    assert np.max(np.abs(got.gamma0 - want)) < 1e-12


def test_hard_xy_average_matches_closed_form(generic_model):
    seq = catalogue_sequence("4p", make_delta(math.pi))
    got = cumulants(seq, generic_model)
    want = analytic_gamma0("hard_4p", generic_model)
    assert np.max(np.abs(got.gamma0 - want)) < 1e-12


def test_soft_inversion_average_matches_closed_form(generic_model, gauss_pi):
    seq = catalogue_sequence("2a", gauss_pi)
    coeffs = compute_coefficients(gauss_pi)
    got = cumulants(seq, generic_model)
    want = analytic_gamma0("soft_pi_x", generic_model, coeffs)
    assert np.max(np.abs(got.gamma0 - want)) < 1e-6


def test_composite_half_pi_average_is_isotropic():
    model = RateModel.nmr(0.23, 0.11, B=(0.05, -0.08, 0.03))
    seq = catalogue_sequence("12", make_delta(math.pi / 2.0))
    got = cumulants(seq, model)
    want = analytic_gamma0("seq12_nmr", model)
    assert np.max(np.abs(got.gamma0 - want)) < 1e-10
    # the dissipative (symmetric) part is fully symmetrized; a static
    # field leaves only an antisymmetric precession remnant
    iso = (2.0 / 3.0) * (2.0 * 0.23 + 0.11) * np.eye(3)
    assert np.max(np.abs(0.5 * (want + want.T) - iso)) < 1e-12


def test_trace_identities(generic_model, gauss_pi):
    for seq_name, shape in (("8s", make_delta(math.pi)), ("4a", gauss_pi)):
        seq = catalogue_sequence(seq_name, shape)
        cum = cumulants(seq, generic_model)
        assert np.trace(cum.gamma0) == pytest.approx(
            2.0 * np.trace(generic_model.gamma_hat), abs=1e-10)
        assert np.trace(cum.gamma1) == pytest.approx(0.0, abs=1e-10)


def test_first_cumulant_is_antisymmetric_without_field():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(3, 3))
    model = RateModel(0.2 * (a @ a.T))
    seq = catalogue_sequence("4p", make_delta(math.pi))
    cum = cumulants(seq, model)
    assert np.max(np.abs(cum.gamma1 + cum.gamma1.T)) < 1e-12


def test_mirrored_pairs_cancel_the_first_cumulant(generic_model):
    for name in ("2a", "8a", "16a"):
        seq = catalogue_sequence(name, make_delta(math.pi))
        cum = cumulants(seq, generic_model)
        assert np.max(np.abs(cum.gamma1)) < 1e-10, name


def test_unsupported_cases():
    model = RateModel.nmr(0.1, 0.2)
    with pytest.raises(UnsupportedCase, match="unknown case"):
        analytic_gamma0("mystery", model)
    with pytest.raises(UnsupportedCase, match="coefficients"):
        analytic_gamma0("soft_pi_x", model)
    assert set(ANALYTIC_CASES) >= {"hard_pi_x", "soft_pi_x", "hard_4p",
                                   "soft_4p", "seq12_nmr", "seq48_nmr"}


def test_quadrature_guard(generic_model, gauss_pi):
    seq = catalogue_sequence("2a", gauss_pi)
    with pytest.raises(QuadratureNotConverged):
        cumulants(seq, generic_model, n_per_pulse=8, tol=1e-15)


def test_open_cycle_warns(generic_model):
    seq = catalogue_sequence("1", make_delta(math.pi))
    with pytest.warns(UserWarning, match="residual control rotation"):
        cumulants(seq, generic_model)


def test_closed_cycle_does_not_warn(generic_model):
    seq = catalogue_sequence("4p", make_delta(math.pi))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cumulants(seq, generic_model)
