"""Decoherence rate model and the 3x3 Bloch generator.

The Bloch vector R obeys  dR/dt = -Gamma_hat R + (control terms), with

    Gamma_hat = (Tr gamma_hat) * 1 - gamma_hat - [B x]

built from a symmetric non-negative rate matrix gamma_hat and a static (or
slowly varying) field B.  The antisymmetric thermal part R_vec is stored for
completeness but never propagated: it does not move the trace of the
evolution matrix, which is the only quantity the fidelity metrics use.

The NMR special case gamma_hat = diag(gamma, gamma, gamma_phi) gives

    Gamma_hat = [[gamma + gamma_phi,  B_z, -B_y],
                 [-B_z, gamma + gamma_phi,  B_x],
                 [ B_y, -B_x,           2 gamma]]

so 1/T_1 = 2 gamma and 1/T_2 = gamma + gamma_phi.  All rates are per tau_p;
the package runs with tau_p = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._linalg import cross_matrix
from .errors import IndefiniteRates, NotNmrForm

#: eigenvalue floor below which a rate matrix is rejected as indefinite
PSD_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RateModel:
    """gamma_hat (symmetric 3x3), static field B, stored thermal part R_vec."""

    gamma_hat: np.ndarray
    B: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R_vec: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        g = np.array(self.gamma_hat, dtype=float)
        if g.shape != (3, 3):
            raise ValueError("gamma_hat must be 3x3")
        if np.max(np.abs(g - g.T)) > 1e-12 * max(1.0, float(np.max(np.abs(g)))):
            raise ValueError("gamma_hat must be symmetric")
        g = 0.5 * (g + g.T)
        g.setflags(write=False)
        b = np.array(self.B, dtype=float).reshape(3)
        b.setflags(write=False)
        r = np.array(self.R_vec, dtype=float).reshape(3)
        r.setflags(write=False)
        object.__setattr__(self, "gamma_hat", g)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "R_vec", r)

    @classmethod
    def nmr(cls, gamma: float, gamma_phi: float, B=(0.0, 0.0, 0.0)) -> "RateModel":
        """diag(gamma, gamma, gamma_phi) rate matrix."""
        return cls(np.diag([gamma, gamma, gamma_phi]), np.asarray(B, dtype=float))

    @property
    def is_nmr(self) -> bool:
        g = self.gamma_hat
        off = abs(g[0, 1]) + abs(g[0, 2]) + abs(g[1, 2])
        scale = max(1.0, float(np.max(np.abs(g))))
        return off <= 1e-12 * scale and abs(g[0, 0] - g[1, 1]) <= 1e-12 * scale

    @property
    def nmr_rates(self) -> tuple[float, float]:
        """(gamma, gamma_phi) for an NMR-form model."""
        if not self.is_nmr:
            raise NotNmrForm("rate matrix is not diag(gamma, gamma, gamma_phi)")
        return float(self.gamma_hat[0, 0]), float(self.gamma_hat[2, 2])

    def scaled(self, factor: float) -> "RateModel":
        """Model with gamma_hat and B multiplied by `factor`.

        Shrinking the rates at fixed tau_p is equivalent to shrinking tau_p
        at fixed rates, which is how the order-scaling checks realize
        tau_p -> tau_p/2 without touching the pulse grid.
        """
        return RateModel(self.gamma_hat * factor, self.B * factor, self.R_vec)


def build_generator(model: RateModel) -> np.ndarray:
    """Gamma_hat = (Tr gamma) 1 - gamma_hat - [B x].

    Raises IndefiniteRates if gamma_hat has an eigenvalue below -PSD_TOL.
    """
    g = model.gamma_hat
    eigs = np.linalg.eigvalsh(g)
    if eigs[0] < -PSD_TOL:
        raise IndefiniteRates(f"gamma_hat eigenvalue {eigs[0]:.3e} < -{PSD_TOL:.0e}")
    return np.trace(g) * np.eye(3) - g - cross_matrix(model.B)


def dissipator(model: RateModel) -> np.ndarray:
    """The field-free part (Tr gamma) 1 - gamma_hat of the generator."""
    g = model.gamma_hat
    return np.trace(g) * np.eye(3) - g


def symmetrized_target(model: RateModel) -> np.ndarray:
    """(2/3)(2 gamma + gamma_phi) * 1 — rates redistributed equally.

    Only defined for NMR-form models (raises NotNmrForm otherwise): the
    target preserves the generator trace 2(2 gamma + gamma_phi) while
    equalizing the three channels.
    """
    gamma, gamma_phi = model.nmr_rates
    return (2.0 / 3.0) * (2.0 * gamma + gamma_phi) * np.eye(3)


def effective_T1_4p(model: RateModel, upsilon2: float) -> float:
    """Longitudinal rate under the four-pulse cycle with a shaped pi pulse:
    2 gamma - (gamma - gamma_phi) (1 + upsilon2) / 2."""
    gamma, gamma_phi = model.nmr_rates
    return 2.0 * gamma - (gamma - gamma_phi) * (1.0 + upsilon2) / 2.0
