"""Interaction-frame generator and its first two time-ordered cumulants.

Over one sequence period the Bloch evolution factorizes as
Q(tau) = Q0(tau) * exp(-tau * Gamma_bar) with

    Gamma_bar = Gamma_bar^(0) + Gamma_bar^(1) + ...,
    Gamma_bar^(0) = (1/tau) * integral of Gamma(t),
    Gamma_bar^(1) = -(1/2 tau) * double integral over t2 > t1 of
                    [Gamma(t2), Gamma(t1)],

where Gamma(t) = Q0(t)^T Gamma_hat Q0(t) is the generator seen from the
control frame.  Gamma_bar^(k) scales as (rates * tau)^k relative to the
leading term, so truncations improve as the pulses shrink.

Two exact identities anchor every computation here: trace(Gamma_bar^(0)) =
2 trace(gamma_hat) (similarity preserves the trace) and
trace(Gamma_bar^(k>0)) = 0 (traces of commutators vanish).

Numerics: the period is walked slot by slot.  Free slots and delta-pulse
half-slots contribute piecewise-constant Gamma (integrated exactly); soft
pulses are sampled on a uniform slot grid and integrated by composite
Simpson.  The commutator integral uses a cumulative trapezoid evaluated at
two strides and Richardson-extrapolated, which also yields the quoted error
estimate.  Closed-form averaged generators for the standard cases are
provided for cross-checking.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._linalg import rotation_batch, rotation_matrix
from .errors import QuadratureNotConverged, UnsupportedCase
from .pulse_shapes import phase as pulse_phase
from .rate_model import RateModel, build_generator
from .sequences import Sequence, control_rotation, residual_rotation
from .shape_coeffs import ShapeCoefficients


@dataclass(frozen=True)
class CumulantResult:
    """First two cumulants of one sequence period plus the error estimate."""

    gamma0: np.ndarray
    gamma1: np.ndarray
    residual_norm: float

    @property
    def total(self) -> np.ndarray:
        return self.gamma0 + self.gamma1


def interaction_generator(seq: Sequence, model: RateModel, t: float) -> np.ndarray:
    """Gamma(t) = Q0(t)^T Gamma_hat Q0(t); same trace and spectrum as Gamma_hat."""
    q0 = control_rotation(seq, t)
    gen = build_generator(model)
    return q0.T @ gen @ q0


def _auto_samples(seq: Sequence) -> int:
    """Per-slot sample count that resolves the fastest waveform present."""
    n = 256
    for pulse in seq.pulses:
        if pulse is None or pulse.shape.kind == "delta":
            continue
        if pulse.shape.kind == "gaussian":
            n = max(n, int(math.ceil(64.0 / pulse.shape.width)))
        else:
            n = max(n, 128 * (len(pulse.shape.coeffs) - 1))
    return -(-n // 4) * 4  # round up to a multiple of 4 for strided Simpson


def _build_pieces(seq: Sequence, model: RateModel, n: int):
    """Ordered list of (length, Gamma) pieces over one period.

    Gamma is a constant (3, 3) array for free slots and delta half-slots,
    or a (n+1, 3, 3) sample array for a soft pulse slot.
    """
    gen = build_generator(model)
    tau_p = seq.tau_p
    t_loc = np.linspace(0.0, tau_p, n + 1)
    pieces = []
    q_left = np.eye(3)
    for pulse in seq.pulses:
        if pulse is None:
            pieces.append((tau_p, q_left.T @ gen @ q_left))
            continue
        if pulse.shape.kind == "delta":
            pieces.append((0.5 * tau_p, q_left.T @ gen @ q_left))
            q_left = rotation_matrix(pulse.axis, pulse.sign * pulse.shape.phi0) @ q_left
            pieces.append((0.5 * tau_p, q_left.T @ gen @ q_left))
            continue
        angles = pulse.sign * np.asarray(pulse_phase(pulse.shape, t_loc))
        q0 = rotation_batch(pulse.axis, angles) @ q_left
        pieces.append((tau_p, np.einsum("tji,jk,tkl->til", q0, gen, q0)))
        q_left = rotation_matrix(pulse.axis, pulse.sign * pulse.shape.phi0) @ q_left
    return pieces


def _gamma0_sum(pieces, stride: int) -> np.ndarray:
    out = np.zeros((3, 3))
    for length, g in pieces:
        if g.ndim == 2:
            out += length * g
            continue
        gs = g[::stride]
        m = gs.shape[0] - 1
        h = length / m
        w = np.ones(m + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        out += (h / 3.0) * np.einsum("t,tij->ij", w, gs)
    return out


def _commutator_integral(pieces, stride: int) -> np.ndarray:
    """integral over the period of [Gamma(t), C(t)] dt with C(t) = int_0^t Gamma.

    Constant pieces are exact (C is linear there, the commutator linear in t,
    and the trapezoid integrates linears exactly); sampled pieces carry the
    O(h^2) trapezoid error that the caller removes by Richardson.
    """
    c = np.zeros((3, 3))
    total = np.zeros((3, 3))
    for length, g in pieces:
        if g.ndim == 2:
            k0 = g @ c - c @ g
            c_end = c + length * g
            k1 = g @ c_end - c_end @ g
            total += 0.5 * length * (k0 + k1)
            c = c_end
            continue
        gs = g[::stride]
        m = gs.shape[0] - 1
        h = length / m
        mids = 0.5 * h * (gs[:-1] + gs[1:])
        c_t = np.concatenate([c[None], c[None] + np.cumsum(mids, axis=0)])
        k = np.einsum("tij,tjk->tik", gs, c_t) - np.einsum("tij,tjk->tik", c_t, gs)
        total += h * (k.sum(axis=0) - 0.5 * (k[0] + k[-1]))
        c = c_t[-1]
    return total


def cumulants(seq: Sequence, model: RateModel, n_per_pulse: int | None = None,
              tol: float = 1e-6) -> CumulantResult:
    """Gamma_bar^(0) and Gamma_bar^(1) for one period of `seq` under `model`.

    `n_per_pulse` overrides the automatic per-slot sample count.  Raises
    QuadratureNotConverged when the combined error estimate exceeds `tol`;
    warns when the sequence is not periodic (Q0(tau) far from identity),
    since a single exponent only reproduces stroboscopic evolution then.
    """
    defect = float(np.max(np.abs(residual_rotation(seq) - np.eye(3))))
    if defect > 1e-8:
        warnings.warn(
            f"sequence {seq.name!r} has residual control rotation (defect {defect:.2e});"
            " cumulants describe the toggling frame, not a periodic propagator",
            stacklevel=2)
    n = n_per_pulse if n_per_pulse is not None else _auto_samples(seq)
    n = max(4, -(-n // 4) * 4)
    pieces = _build_pieces(seq, model, n)
    tau = seq.tau

    g0_coarse = _gamma0_sum(pieces, 2) / tau
    g0 = _gamma0_sum(pieces, 1) / tau
    err0 = float(np.max(np.abs(g0 - g0_coarse))) / 15.0  # Simpson is O(h^4)

    j_coarse = _commutator_integral(pieces, 2)
    j_fine = _commutator_integral(pieces, 1)
    j = (4.0 * j_fine - j_coarse) / 3.0
    err1 = float(np.max(np.abs(j_fine - j_coarse))) / (3.0 * 2.0 * tau)
    g1 = -j / (2.0 * tau)

    err = max(err0, err1)
    if err > tol:
        raise QuadratureNotConverged(
            f"cumulant quadrature error estimate {err:.3e} > {tol:.1e}"
            f" (n_per_pulse = {n})", err)
    return CumulantResult(g0, g1, err)


def effective_evolution(cum: CumulantResult, n_periods: int, tau: float) -> np.ndarray:
    """S(n tau) = exp(-n tau (Gamma_bar^(0) + Gamma_bar^(1)))."""
    if n_periods < 0:
        raise ValueError("n_periods must be >= 0")
    if n_periods == 0:
        return np.eye(3)
    return scipy.linalg.expm(-n_periods * tau * cum.total)


# ---------------------------------------------------------------------------
# closed-form averaged generators

ANALYTIC_CASES = ("hard_pi_x", "soft_pi_x", "hard_4p", "soft_4p",
                  "seq12_nmr", "seq24_nmr", "seq48_nmr")


def analytic_gamma0(case: str, model: RateModel,
                    coeffs: ShapeCoefficients | None = None) -> np.ndarray:
    """Closed-form Gamma_bar^(0) for the standard sequence/shape cases.

    ``hard_pi_x``/``hard_4p`` take any model; ``soft_pi_x``/``soft_4p`` need
    the pulse coefficients (upsilon, upsilon2); the composite-train cases
    ``seq12_nmr``/``seq24_nmr``/``seq48_nmr`` require an NMR-form model.
    soft_pi_x reduces to hard_pi_x at upsilon = 0, upsilon2 = -1, and the
    24/48 trains land on the fully symmetrized generator.
    """
    g = model.gamma_hat
    gxx, gyy, gzz = g[0, 0], g[1, 1], g[2, 2]
    gxy, gxz, gyz = g[0, 1], g[0, 2], g[1, 2]
    bx, by, bz = model.B

    if case in ("soft_pi_x", "soft_4p"):
        if coeffs is None:
            raise UnsupportedCase(f"case {case!r} needs pulse coefficients")
        up, up2 = coeffs.upsilon, coeffs.upsilon2
    if case == "hard_pi_x":
        up, up2 = 0.0, -1.0
        case = "soft_pi_x"

    if case == "soft_pi_x":
        return np.array([
            [gyy + gzz, up * (by + gxz), up * (bz - gxy)],
            [up * (-by + gxz),
             gxx + gyy * (1 + up2) / 2 + gzz * (1 - up2) / 2,
             up2 * gyz + bx],
            [-up * (bz + gxy),
             up2 * gyz - bx,
             gxx + gyy * (1 - up2) / 2 + gzz * (1 + up2) / 2],
        ])
    if case == "hard_4p":
        return np.diag([gyy + gzz, gxx + gzz, gxx + gyy])
    if case == "soft_4p":
        return np.array([
            [gyy + gzz * (3 - up2) / 4 + gxx * (1 + up2) / 4,
             -(up / 2) * (bx + gyz), (up / 2) * (gxy - bz)],
            [(up / 2) * (bx - gyz),
             gxx + gzz * (3 - up2) / 4 + gyy * (1 + up2) / 4, 0.0],
            [(up / 2) * (bz + gxy), 0.0,
             (gxx + gyy) * (3 - up2) / 4 + gzz * (1 + up2) / 2],
        ])
    if case == "seq12_nmr":
        gamma, gamma_phi = model.nmr_rates  # raises NotNmrForm
        d = 4.0 * (2.0 * gamma + gamma_phi)
        return (1.0 / 6.0) * np.array([
            [d, 2 * by, -bz],
            [-2 * by, d, -bz],
            [bz, bz, d],
        ])
    if case in ("seq24_nmr", "seq48_nmr"):
        gamma, gamma_phi = model.nmr_rates
        return (2.0 / 3.0) * (2.0 * gamma + gamma_phi) * np.eye(3)
    raise UnsupportedCase(f"unknown case {case!r}; known: {', '.join(ANALYTIC_CASES)}")
