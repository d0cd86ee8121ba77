"""Dynamical-decoupling toolkit for a dissipative qubit.

The package simulates a single qubit driven by periodic pulse sequences
while it relaxes under a static rate model and dephases under slow
Gaussian noise, all in the Bloch-vector picture.  It computes the
cumulants of the average relaxation generator for arbitrary symmetric
pulse shapes, designs shapes that zero chosen cumulant coefficients,
and runs the fidelity experiments that quantify how much of the
decoupling survives finite pulse width.

Everything is expressed in pulse-duration units: times in tau_p, rates
and field amplitudes in 1/tau_p.
"""
from .errors import (AngleMismatch, AsymmetricPulse, BlochddError,
                     CheckpointMismatch, ConfigError, DeltaNotPointwise,
                     GridTooCoarse, IndefiniteRates, NotConverged,
                     NotNmrForm, OutOfRange, QuadratureNotConverged,
                     StepTooLarge, UnknownSequence, UnknownShape,
                     UnsupportedCase)
from .pulse_shapes import (PulseShape, catalogue, catalogue_lookup,
                           evaluate_waveform, make_delta, phase,
                           symmetrized_angle)
from .shape_coeffs import (ShapeCoefficients, compute_coefficients,
                           delta_coefficients, load_reference_table,
                           table_csv_rows)
from .rate_model import RateModel, build_generator
from .sequences import (Sequence, catalogue_names, catalogue_sequence,
                        parse_dsl, residual_rotation)
from .magnus import CumulantResult, analytic_gamma0, cumulants
from .noise import NoiseRealization, NoiseSpec, generate, generate_block
from .propagator import (EvolutionRecord, auto_dt, propagate,
                         propagate_ensemble, product_expansion_check)
from .fidelity import (FidelitySeries, effective_rates, fidelity_from_trace,
                       fit_effective_rates, ideal_fidelity,
                       member_fidelities, redistribution_fidelity)
from .shape_designer import DesignSpec, design
from .experiments import (ExperimentConfig, coefficient_table_text,
                          list_presets, load_config, run)
from .acceptance import AcceptanceOptions, CriterionResult, run_all

__version__ = "0.1.0"

__all__ = [
    "AcceptanceOptions",
    "AngleMismatch",
    "AsymmetricPulse",
    "BlochddError",
    "CheckpointMismatch",
    "ConfigError",
    "CriterionResult",
    "CumulantResult",
    "DeltaNotPointwise",
    "DesignSpec",
    "ExperimentConfig",
    "FidelitySeries",
    "GridTooCoarse",
    "IndefiniteRates",
    "NoiseSpec",
    "NotConverged",
    "NotNmrForm",
    "OutOfRange",
    "EvolutionRecord",
    "NoiseRealization",
    "PulseShape",
    "QuadratureNotConverged",
    "RateModel",
    "Sequence",
    "ShapeCoefficients",
    "StepTooLarge",
    "UnknownSequence",
    "UnknownShape",
    "UnsupportedCase",
    "analytic_gamma0",
    "auto_dt",
    "build_generator",
    "catalogue",
    "catalogue_names",
    "catalogue_lookup",
    "catalogue_sequence",
    "coefficient_table_text",
    "compute_coefficients",
    "cumulants",
    "delta_coefficients",
    "design",
    "effective_rates",
    "evaluate_waveform",
    "fidelity_from_trace",
    "fit_effective_rates",
    "generate",
    "generate_block",
    "ideal_fidelity",
    "list_presets",
    "parse_dsl",
    "product_expansion_check",
    "load_config",
    "load_reference_table",
    "make_delta",
    "member_fidelities",
    "phase",
    "propagate",
    "propagate_ensemble",
    "redistribution_fidelity",
    "run",
    "run_all",
    "residual_rotation",
    "symmetrized_angle",
    "table_csv_rows",
]
