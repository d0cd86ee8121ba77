"""Control waveforms V(t), their integrated phase, and the built-in shape registry.

A pulse occupies the interval [0, tau_p] and is one of three kinds:

``delta``
    Instantaneous rotation by the full nominal angle phi0 at t = tau_p/2.
    It has no pointwise field value, only a stepped phase.

``gaussian``
    Truncated Gaussian of relative width x (fraction of tau_p), rescaled so
    the truncated integral is exactly phi0.  The raw bell integrates to
    slightly less than one on [0, tau_p]; the rescale guarantees the nominal
    rotation angle regardless of x.

``fourier``
    Cosine series V(t) = (2 pi / tau_p) * sum_n A_n cos(2 pi n t / tau_p).
    The accumulated angle over the pulse is 2 pi A_0, so A_0 = phi0 / (2 pi).

All catalogue shapes are symmetric about the pulse midpoint,
V(tau_p - t) = V(t); the symmetrized angle phase(t) - phi0/2 is then odd
about the midpoint, which is what the coefficient integrals rely on.

The registry is a plain-text table (one shape per row, ``name phi0 kind
params...``) shipped with the package and overridable from user files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.special import erf

from .errors import DeltaNotPointwise, OutOfRange, UnknownShape

DEFAULT_GRID = 256  # sample points per tau_p when a uniform grid is needed

# Flag attached to registry rows transcribed from a source with a known defect.
CORRUPTED_SOURCE = "corrupted_source"


@dataclass(frozen=True)
class PulseShape:
    """Immutable description of one control waveform.

    Parameters
    ----------
    kind : {'delta', 'gaussian', 'fourier'}
    phi0 : float
        Nominal rotation angle in radians.
    tau_p : float
        Pulse duration.  Everything in the package runs with tau_p = 1 and
        rates quoted per tau_p; the field exists so the scaling is explicit.
    width : float, optional
        Gaussian relative width x (required for kind='gaussian').
    coeffs : tuple of float, optional
        Fourier coefficients A_0..A_N (required for kind='fourier').
    smooth : int
        Endpoint smoothness class: 1 means sum A_n = 0 (waveform vanishes at
        the ends), 2 additionally sum n^2 A_n = 0.  Informational for delta
        and gaussian kinds.
    flags : tuple of str
        Free-form markers; ``corrupted_source`` marks a row transcribed
        verbatim from a defective source and not safe to integrate.
    """

    kind: str
    phi0: float
    tau_p: float = 1.0
    width: float | None = None
    coeffs: tuple[float, ...] | None = None
    name: str = ""
    smooth: int = 0
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in ("delta", "gaussian", "fourier"):
            raise UnknownShape(f"unknown pulse kind {self.kind!r}")
        if self.kind == "gaussian" and (self.width is None or self.width <= 0):
            raise ValueError("gaussian shape needs a positive width")
        if self.kind == "fourier":
            if not self.coeffs:
                raise ValueError("fourier shape needs at least A_0")
            a0 = self.coeffs[0]
            if abs(2.0 * math.pi * a0 - self.phi0) > 1e-9 * max(1.0, abs(self.phi0)):
                raise ValueError(
                    f"fourier A_0 = {a0} inconsistent with phi0 = {self.phi0}"
                    " (need A_0 = phi0 / 2 pi)"
                )

    @property
    def is_corrupted(self) -> bool:
        return CORRUPTED_SOURCE in self.flags

    def with_phi0(self, phi0: float) -> "PulseShape":
        """Same waveform profile rescaled to a different nominal angle."""
        if self.kind == "fourier":
            scale = phi0 / self.phi0
            coeffs = tuple(scale * a for a in self.coeffs)
            return PulseShape(self.kind, phi0, self.tau_p, None, coeffs,
                              self.name, self.smooth, self.flags)
        return PulseShape(self.kind, phi0, self.tau_p, self.width, self.coeffs,
                          self.name, self.smooth, self.flags)


def _gaussian_mass(width: float) -> float:
    # integral of the unit-normalized bell truncated to the pulse interval
    return float(erf(1.0 / (2.0 * math.sqrt(2.0) * width)))


def evaluate_waveform(shape: PulseShape, t) -> np.ndarray | float:
    """Field amplitude V(t) in 1/tau_p units; t may be scalar or array.

    Raises DeltaNotPointwise for delta pulses and OutOfRange outside
    [0, tau_p] (a relative 1e-12 slop is tolerated at the endpoints).
    """
    if shape.kind == "delta":
        raise DeltaNotPointwise("delta pulse has no pointwise field value")
    t_arr = np.asarray(t, dtype=float)
    slop = 1e-12 * shape.tau_p
    if np.any(t_arr < -slop) or np.any(t_arr > shape.tau_p + slop):
        raise OutOfRange(f"t outside [0, {shape.tau_p}]")
    u = t_arr / shape.tau_p
    if shape.kind == "gaussian":
        x = shape.width
        m = _gaussian_mass(x)
        bell = np.exp(-0.5 * ((u - 0.5) / x) ** 2) / (math.sqrt(2.0 * math.pi) * x)
        out = shape.phi0 * bell / (m * shape.tau_p)
    else:  # fourier
        out = np.zeros_like(u)
        for n, a_n in enumerate(shape.coeffs):
            out += a_n * np.cos(2.0 * math.pi * n * u)
        out *= 2.0 * math.pi / shape.tau_p
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(out)
    return out


def phase(shape: PulseShape, t) -> np.ndarray | float:
    """Accumulated rotation angle phi(t) = integral of V from 0 to t.

    phi(0) = 0 and phi(tau_p) = phi0 for every kind; the delta pulse steps
    by phi0 at the midpoint.
    """
    t_arr = np.asarray(t, dtype=float)
    slop = 1e-12 * shape.tau_p
    if np.any(t_arr < -slop) or np.any(t_arr > shape.tau_p + slop):
        raise OutOfRange(f"t outside [0, {shape.tau_p}]")
    u = t_arr / shape.tau_p
    if shape.kind == "delta":
        out = np.where(u >= 0.5, shape.phi0, 0.0)
    elif shape.kind == "gaussian":
        x = shape.width
        m = _gaussian_mass(x)
        out = shape.phi0 * (erf((u - 0.5) / (math.sqrt(2.0) * x)) + m) / (2.0 * m)
    else:
        out = 2.0 * math.pi * shape.coeffs[0] * u
        for n, a_n in enumerate(shape.coeffs):
            if n == 0:
                continue
            out = out + (a_n / n) * np.sin(2.0 * math.pi * n * u)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(out)
    return out


def symmetrized_angle(shape: PulseShape, t) -> np.ndarray | float:
    """phi(t) - phi0/2: odd about the midpoint for symmetric shapes."""
    return phase(shape, t) - 0.5 * shape.phi0


def sample_times(shape: PulseShape, points: int = DEFAULT_GRID) -> np.ndarray:
    """Uniform grid of `points`+1 nodes covering [0, tau_p]."""
    return np.linspace(0.0, shape.tau_p, points + 1)


# ---------------------------------------------------------------------------
# registry

def parse_registry(text: str) -> dict[str, PulseShape]:
    """Parse registry rows ``name phi0 kind [key=value...] params...``.

    phi0 accepts the literals ``pi`` and ``pi/2`` or a float in radians.
    Options: ``smooth=N`` (endpoint smoothness class) and ``flags=a,b``.
    Lines starting with '#' and blank lines are ignored.
    """
    shapes: dict[str, PulseShape] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) < 3:
            raise ValueError(f"registry line {lineno}: need 'name phi0 kind ...'")
        name, phi0_tok, kind = tokens[0], tokens[1], tokens[2]
        if phi0_tok == "pi":
            phi0 = math.pi
        elif phi0_tok == "pi/2":
            phi0 = math.pi / 2.0
        else:
            phi0 = float(phi0_tok)
        smooth = 0
        flags: tuple[str, ...] = ()
        params: list[float] = []
        for tok in tokens[3:]:
            if tok.startswith("smooth="):
                smooth = int(tok.split("=", 1)[1])
            elif tok.startswith("flags="):
                flags = tuple(f for f in tok.split("=", 1)[1].split(",") if f)
            else:
                params.append(float(tok))
        if kind == "delta":
            shape = PulseShape("delta", phi0, name=name, smooth=smooth, flags=flags)
        elif kind == "gaussian":
            if len(params) != 1:
                raise ValueError(f"registry line {lineno}: gaussian needs one width")
            shape = PulseShape("gaussian", phi0, width=params[0], name=name,
                               smooth=smooth, flags=flags)
        elif kind == "fourier":
            shape = PulseShape("fourier", phi0, coeffs=tuple(params), name=name,
                               smooth=smooth, flags=flags)
        else:
            raise UnknownShape(f"registry line {lineno}: unknown kind {kind!r}")
        shapes[name] = shape
    return shapes


def load_registry(path) -> dict[str, PulseShape]:
    """Load a user registry file (same format as the built-in table)."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_registry(fh.read())


_ALIASES = {
    "G010_pi": "G_0.10_pi",
    "G001_pi": "G_0.01_pi",
    "G010_pi2": "G_0.10_pi2",
    "G001_pi2": "G_0.01_pi2",
}

_catalogue_cache: dict[str, PulseShape] | None = None


def catalogue() -> dict[str, PulseShape]:
    """The built-in shape registry (read once from packaged data)."""
    global _catalogue_cache
    if _catalogue_cache is None:
        text = resources.files("blochdd").joinpath("data/shapes.txt").read_text()
        _catalogue_cache = parse_registry(text)
    return _catalogue_cache


def catalogue_lookup(name: str) -> PulseShape:
    """Fetch a shape by registry name.

    Raises UnknownShape for unrecognized names.  Rows flagged
    ``corrupted_source`` are returned verbatim (transcription honesty); check
    ``shape.is_corrupted`` before doing arithmetic with them.
    """
    table = catalogue()
    key = _ALIASES.get(name, name)
    if key not in table:
        known = ", ".join(sorted(table))
        raise UnknownShape(f"unknown shape {name!r}; registry has: {known}")
    return table[key]


def make_delta(phi0: float, tau_p: float = 1.0) -> PulseShape:
    """Parametric delta pulse for arbitrary nominal angle."""
    return PulseShape("delta", phi0, tau_p, name=f"delta({phi0:g})")
