"""Average-fidelity metrics and infidelity decomposition.

For a qubit evolving under the Bloch evolution matrix Q, the fidelity
averaged uniformly over initial states at the commensurate checkpoints is

    <F(t_s)> = 1/2 (1 + Tr Q(t_s) / 3),

equal to 1 for perfect evolution and saturating at 1/2 under full
depolarization.  Three reference curves decompose the loss:

  * ideal_fidelity      -- dephasing-only decay (2 + exp(-gamma_phi t)) / 3,
                           the best any pi-pulse train can do;
  * redistribution_fidelity -- the loss after soft pulses redistribute
                           dephasing into both relaxation channels,
                           controlled entirely by the coefficient upsilon2;
  * decoupling_error    -- Delta F(t) = <F(t)>_0 - <F(t)>, the gap between
                           the controlled run without slow noise and the
                           controlled run with it.

Effective rates are extracted from the Q diagonals by least-squares fits
of the logarithm over the second half of a run, which avoids the
transients near the start.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointMismatch
from .propagator import EvolutionRecord


@dataclass(frozen=True)
class FidelitySeries:
    """Fidelity curve at checkpoints, with optional reference curves."""

    times: np.ndarray
    F_avg: np.ndarray
    stderr: np.ndarray | None = None
    F_ideal: np.ndarray | None = None
    F_redist: np.ndarray | None = None
    delta_F: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        cols = ["t", "F_avg", "stderr", "F_ideal", "F_redist", "delta_F"]
        arrays = [self.times, self.F_avg, self.stderr, self.F_ideal,
                  self.F_redist, self.delta_F]
        present = [(c, a) for c, a in zip(cols, arrays) if a is not None]
        lines = [",".join(c for c, _ in present)]
        for i in range(len(self.times)):
            lines.append(",".join(f"{a[i]:.12g}" for _, a in present))
        return "\n".join(lines) + "\n"


def fidelity_from_trace(q: np.ndarray) -> np.ndarray:
    """1/2 (1 + Tr Q / 3) along the last two axes."""
    return 0.5 * (1.0 + np.trace(q, axis1=-2, axis2=-1) / 3.0)


def average_fidelity(record: EvolutionRecord) -> FidelitySeries:
    """Fidelity series of a single evolution record."""
    return FidelitySeries(times=record.times.copy(),
                          F_avg=fidelity_from_trace(record.Q),
                          metadata=dict(record.metadata))


def member_fidelities(stack: np.ndarray) -> np.ndarray:
    """Per-member fidelity curves, (E, S+1) from an (E, S+1, 3, 3) stack."""
    return fidelity_from_trace(stack)


def ensemble_fidelity(stack: np.ndarray, times: np.ndarray,
                      metadata: dict | None = None) -> FidelitySeries:
    """Ensemble mean fidelity with the standard error of the mean."""
    f = member_fidelities(stack)
    n_e = f.shape[0]
    stderr = (f.std(axis=0, ddof=1) / np.sqrt(n_e) if n_e > 1
              else np.zeros(f.shape[1]))
    return FidelitySeries(times=np.asarray(times, float).copy(),
                          F_avg=f.mean(axis=0), stderr=stderr,
                          metadata=dict(metadata or {}, ensemble=n_e))


def ideal_fidelity(t: np.ndarray, gamma_phi: float) -> np.ndarray:
    """(2 + exp(-gamma_phi t)) / 3: dephasing-only decay, hard-pulse limit."""
    t = np.asarray(t, dtype=float)
    return (2.0 + np.exp(-gamma_phi * t)) / 3.0


def effective_rates(gamma_phi: float, upsilon2: float) -> tuple[float, float]:
    """(gamma_1eff, gamma_2eff) of the redistributed decay at given upsilon2."""
    return (gamma_phi * (1.0 + upsilon2) / 2.0,
            gamma_phi * (3.0 - upsilon2) / 4.0)


def redistribution_fidelity(t: np.ndarray, gamma_phi: float,
                            upsilon2: float) -> np.ndarray:
    """(1/6) (3 + exp(-gamma_1eff t) + 2 exp(-gamma_2eff t)).

    upsilon2 = -1 reproduces the ideal curve (hard pulses redistribute
    nothing); upsilon2 = 1/3 gives the fully symmetrized decay
    (1/2)(1 + exp(-2 gamma_phi t / 3)) with both rates equal.
    """
    if gamma_phi < 0:
        raise ValueError("gamma_phi must be >= 0")
    t = np.asarray(t, dtype=float)
    g1, g2 = effective_rates(gamma_phi, upsilon2)
    return (3.0 + np.exp(-g1 * t) + 2.0 * np.exp(-g2 * t)) / 6.0


def decoupling_error(with_noise: FidelitySeries,
                     without_noise: FidelitySeries) -> np.ndarray:
    """Delta F(t) = <F(t)>_0 - <F(t)> on matching checkpoints."""
    if (len(with_noise.times) != len(without_noise.times)
            or np.max(np.abs(with_noise.times - without_noise.times)) > 1e-9):
        raise CheckpointMismatch("fidelity series have different checkpoints")
    return without_noise.F_avg - with_noise.F_avg


def fit_decay_rate(times: np.ndarray, values: np.ndarray,
                   fit_window: float = 0.5) -> float:
    """Decay rate from a log-linear least-squares fit.

    Fits ln(values) = a - r t over the trailing `fit_window` fraction of
    the samples and returns r.  Values must stay positive there.
    """
    times = np.asarray(times, float)
    values = np.asarray(values, float)
    n = len(times)
    start = int(np.floor((1.0 - fit_window) * n))
    start = min(max(start, 0), n - 2)
    t = times[start:]
    v = values[start:]
    if np.any(v <= 0):
        raise ValueError("values must be positive over the fit window")
    slope = np.polyfit(t, np.log(v), 1)[0]
    return -float(slope)


def fit_effective_rates(record: EvolutionRecord,
                        fit_window: float = 0.5) -> tuple[float, float]:
    """(gamma_1eff, gamma_2eff) from the diagonals of a noise-free run.

    gamma_1eff is the z-channel rate (from Q_zz) and gamma_2eff the
    transverse rate (mean of the Q_xx and Q_yy fits), matching the
    redistribution formula's exponents.  A channel that never decays
    (e.g. Q_zz = 1 under hard pi-pulses) fits to 0.
    """
    d = np.einsum("tii->ti", record.Q)
    rx = fit_decay_rate(record.times, d[:, 0], fit_window)
    ry = fit_decay_rate(record.times, d[:, 1], fit_window)
    rz = fit_decay_rate(record.times, d[:, 2], fit_window)
    return rz, 0.5 * (rx + ry)
