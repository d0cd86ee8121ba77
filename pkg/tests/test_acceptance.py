"""Acceptance gate: one test per numbered criterion, contract tolerances.

Each test runs its check through `run_all` and prints the one-line
verdict; run with `-s` (or read failure output) for the measured values.
The ensemble criteria share cached runs, so keeping the file order keeps
the total runtime down.
"""
from blochdd.acceptance import run_all


def _run(index):
    result = run_all(indices=(index,))[0]
    print(result.line())
    assert result.passed, result.line()


def test_criterion_01_delta_pulse_closed_forms():
    _run(1)


def test_criterion_02_reference_coefficient_table():
    _run(2)


def test_criterion_03_cumulant_trace_identities():
    _run(3)


def test_criterion_04_analytic_vs_numeric_cumulants():
    _run(4)


def test_criterion_05_defect_order_scaling():
    _run(5)


def test_criterion_06_fidelity_endpoints():
    _run(6)


def test_criterion_07_redistribution_law():
    _run(7)


def test_criterion_08_ensemble_fidelity_ordering():
    _run(8)


def test_criterion_09_decoupling_error_ordering():
    _run(9)


def test_criterion_10_designer_symmetrization_closure():
    _run(10)


def test_criterion_11_noise_autocovariance():
    _run(11)
