"""Exception types shared across the package.

Everything raised on purpose derives from :class:`BlochddError` so callers
can catch the package's own failures without swallowing genuine bugs.
"""

from __future__ import annotations


class BlochddError(Exception):
    """Base class for all package-specific errors."""


class DeltaNotPointwise(BlochddError):
    """A delta pulse has no pointwise field value; use phase() instead."""


class OutOfRange(BlochddError):
    """Time argument outside the pulse interval [0, tau_p]."""


class UnknownShape(BlochddError):
    """Shape name not present in the registry."""


class QuadratureNotConverged(BlochddError):
    """Successive quadrature refinements disagree beyond tolerance."""

    def __init__(self, message: str, estimate: float | None = None):
        super().__init__(message)
        self.estimate = estimate


class AsymmetricPulse(BlochddError):
    """Pulse waveform fails the V(t) = V(tau_p - t) symmetry check."""


class IndefiniteRates(BlochddError):
    """Rate matrix has a negative eigenvalue below tolerance."""


class NotNmrForm(BlochddError):
    """Operation requires a diagonal rate matrix diag(gamma, gamma, gamma_phi)."""


class AngleMismatch(BlochddError):
    """Pulse nominal angle incompatible with the requested sequence."""


class UnknownSequence(BlochddError):
    """Sequence name not present in the catalogue."""


class UnsupportedCase(BlochddError):
    """No closed-form generator is available for the requested case."""


class GridTooCoarse(BlochddError):
    """Noise sample step too large to resolve the correlation function."""


class StepTooLarge(BlochddError):
    """Integrator step violates the max |V|*dt accuracy guard."""


class CheckpointMismatch(BlochddError):
    """Two series being combined were recorded on different checkpoints."""


class NotConverged(BlochddError):
    """Optimizer failed to reach the requested residual."""

    def __init__(self, message: str, best_residual: float, restarts: int):
        super().__init__(message)
        self.best_residual = best_residual
        self.restarts = restarts


class ConfigError(BlochddError):
    """Experiment configuration failed validation."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
