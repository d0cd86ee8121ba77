"""The seven pulse-characterization coefficients.

For a symmetric pulse the first- and second-order contributions of the pulse
interior to the averaged Bloch generator are fully captured by seven scalars,
all averages of trigonometric functions of the symmetrized angle
phi_s(t) = phi(t) - phi0/2:

single averages, (1/tau_p) * integral over the pulse:

    upsilon  = < cos phi_s >
    upsilon2 = < cos 2 phi_s >
    zeta     = < (t/tau_p - 1/2) sin phi_s >
    zeta2    = < (t/tau_p - 1/2) sin 2 phi_s >

double averages, (1/tau_p^2) * integral over 0 <= t' <= t <= tau_p:

    alpha    = < sin(phi_s(t) - phi_s(t')) >
    alpha2   = < sin(2 phi_s(t) - 2 phi_s(t')) >
    mu       = < sin(2 phi_s(t) - phi_s(t')) >

Delta pulses have closed forms; everything else is computed by
Gauss-Legendre quadrature with one refinement step as the error estimate.
Reference-table conventions: the published table lists alpha/2 and alpha_2/2,
so CSV emission includes both the halves and the full values.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import pulse_shapes
from .errors import AsymmetricPulse, QuadratureNotConverged
from .pulse_shapes import PulseShape

#: default Gauss-Legendre node count (doubled once for the error estimate)
DEFAULT_NODES = 160


@dataclass(frozen=True)
class ShapeCoefficients:
    upsilon: float
    upsilon2: float
    alpha: float
    alpha2: float
    zeta: float
    zeta2: float
    mu: float

    def as_dict(self) -> dict[str, float]:
        return {
            "upsilon": self.upsilon,
            "upsilon2": self.upsilon2,
            "alpha": self.alpha,
            "alpha2": self.alpha2,
            "zeta": self.zeta,
            "zeta2": self.zeta2,
            "mu": self.mu,
        }

    def table_row(self) -> dict[str, float]:
        """Row in the published-table convention (alpha and alpha2 halved),
        plus the unhalved values explicitly labeled."""
        return {
            "upsilon": self.upsilon,
            "upsilon2": self.upsilon2,
            "alpha_half": 0.5 * self.alpha,
            "alpha2_half": 0.5 * self.alpha2,
            "zeta": self.zeta,
            "zeta2": self.zeta2,
            "mu": self.mu,
            "alpha": self.alpha,
            "alpha2": self.alpha2,
        }


def _gl_nodes(n: int, tau_p: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * tau_p * (x + 1.0), 0.5 * tau_p * w


def pulse_average(f, tau_p: float = 1.0, tol: float = 1e-10,
                  nodes: int = DEFAULT_NODES) -> float:
    """(1/tau_p) * integral_0^tau_p f(t) dt by Gauss-Legendre quadrature.

    The rule is evaluated at `nodes` and 2*`nodes` points; if the two values
    disagree by more than `tol` (absolute) QuadratureNotConverged is raised.
    """
    vals = []
    for n in (nodes, 2 * nodes):
        t, w = _gl_nodes(n, tau_p)
        vals.append(float(np.sum(w * np.asarray(f(t)))) / tau_p)
    err = abs(vals[1] - vals[0])
    if err > tol:
        raise QuadratureNotConverged(
            f"pulse_average refinement changed by {err:.3e} > {tol:.1e}", err)
    return vals[1]


def double_average(f, tau_p: float = 1.0, tol: float = 1e-10,
                   nodes: int = DEFAULT_NODES) -> float:
    """(1/tau_p^2) * integral over the triangle 0 <= t' <= t <= tau_p of f(t, t').

    The inner integral is mapped to the unit square by t' = t*u, then both
    directions use the same Gauss-Legendre rule; refinement doubles the nodes.
    """
    vals = []
    for n in (nodes, 2 * nodes):
        t, w = _gl_nodes(n, tau_p)
        u, wu = _gl_nodes(n, 1.0)
        big_t = np.broadcast_to(t[:, None], (n, n))
        big_tp = t[:, None] * u[None, :]
        weight = (w[:, None] * wu[None, :]) * t[:, None]
        vals.append(float(np.sum(weight * f(big_t, big_tp))) / tau_p**2)
    err = abs(vals[1] - vals[0])
    if err > tol:
        raise QuadratureNotConverged(
            f"double_average refinement changed by {err:.3e} > {tol:.1e}", err)
    return vals[1]


def delta_coefficients(phi0: float) -> ShapeCoefficients:
    """Closed forms for the instantaneous pulse."""
    return ShapeCoefficients(
        upsilon=math.cos(phi0 / 2.0),
        upsilon2=math.cos(phi0),
        alpha=math.sin(phi0) / 4.0,
        alpha2=math.sin(2.0 * phi0) / 4.0,
        zeta=math.sin(phi0 / 2.0) / 4.0,
        zeta2=math.sin(phi0) / 4.0,
        mu=math.sin(3.0 * phi0 / 2.0) / 4.0,
    )


def _default_nodes(shape: PulseShape) -> int:
    if shape.kind == "gaussian":
        # keep the quadrature ahead of the bell's bandwidth
        return max(DEFAULT_NODES, int(math.ceil(8.0 / shape.width)))
    return DEFAULT_NODES


def _check_symmetric(shape: PulseShape, rtol: float = 1e-9) -> None:
    t = pulse_shapes.sample_times(shape)
    v = np.asarray(pulse_shapes.evaluate_waveform(shape, t))
    scale = float(np.max(np.abs(v))) or 1.0
    defect = float(np.max(np.abs(v - v[::-1])))
    if defect > rtol * scale:
        raise AsymmetricPulse(
            f"waveform asymmetry {defect:.3e} exceeds {rtol:.1e} * max|V|")


def _singles(shape: PulseShape, n: int) -> np.ndarray:
    t, w = _gl_nodes(n, shape.tau_p)
    s = np.asarray(pulse_shapes.symmetrized_angle(shape, t))
    centered = t / shape.tau_p - 0.5
    w = w / shape.tau_p
    return np.array([
        np.sum(w * np.cos(s)),
        np.sum(w * np.cos(2.0 * s)),
        np.sum(w * centered * np.sin(s)),
        np.sum(w * centered * np.sin(2.0 * s)),
    ])


def _doubles(shape: PulseShape, n: int) -> np.ndarray:
    t, w = _gl_nodes(n, shape.tau_p)
    u, wu = _gl_nodes(n, 1.0)
    s_t = np.asarray(pulse_shapes.symmetrized_angle(shape, t))[:, None]
    s_tp = np.asarray(pulse_shapes.symmetrized_angle(shape, t[:, None] * u[None, :]))
    weight = (w[:, None] * wu[None, :]) * t[:, None] / shape.tau_p**2
    return np.array([
        np.sum(weight * np.sin(s_t - s_tp)),
        np.sum(weight * np.sin(2.0 * (s_t - s_tp))),
        np.sum(weight * np.sin(2.0 * s_t - s_tp)),
    ])


def compute_coefficients(shape: PulseShape, tol: float = 1e-10,
                         nodes: int | None = None) -> ShapeCoefficients:
    """All seven coefficients of a symmetric pulse.

    Delta pulses use the closed forms; finite shapes are integrated with the
    node count doubled once for an error estimate.  Raises AsymmetricPulse
    if the sampled waveform is not midpoint-symmetric and
    QuadratureNotConverged if the refinement moves any value beyond `tol`.
    """
    if shape.kind == "delta":
        return delta_coefficients(shape.phi0)
    _check_symmetric(shape)
    n = nodes if nodes is not None else _default_nodes(shape)
    s1, s1r = _singles(shape, n), _singles(shape, 2 * n)
    d1, d1r = _doubles(shape, n), _doubles(shape, 2 * n)
    err = max(float(np.max(np.abs(s1r - s1))), float(np.max(np.abs(d1r - d1))))
    if err > tol:
        raise QuadratureNotConverged(
            f"coefficient refinement changed by {err:.3e} > {tol:.1e}", err)
    ups, ups2, zeta, zeta2 = s1r
    alpha, alpha2, mu = d1r
    return ShapeCoefficients(float(ups), float(ups2), float(alpha),
                             float(alpha2), float(zeta), float(zeta2), float(mu))


# ---------------------------------------------------------------------------
# reference table

def load_reference_table() -> list[dict]:
    """Rows of the shipped reference coefficient table.

    Each row: name, phi0 (radians), the seven reference values in table
    convention (alpha_half/alpha2_half), and a status field; rows with
    status != 'ok' are excluded from verification.
    """
    text = resources.files("blochdd").joinpath("data/coefficient_table.csv").read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    rows = []
    for rec in csv.DictReader(lines):
        phi0 = {"pi": math.pi, "pi/2": math.pi / 2.0}.get(rec["phi0"])
        rows.append({
            "name": rec["name"],
            "phi0": phi0 if phi0 is not None else float(rec["phi0"]),
            "status": rec["status"],
            "values": {k: float(rec[k]) for k in
                       ("upsilon", "upsilon2", "alpha_half", "alpha2_half",
                        "zeta", "zeta2", "mu")},
        })
    return rows


TABLE_COLUMNS = ["name", "phi0", "upsilon", "upsilon2", "alpha_half",
                 "alpha2_half", "zeta", "zeta2", "mu", "alpha", "alpha2"]


def table_csv_rows(names: list[str] | None = None) -> list[dict]:
    """Computed coefficient rows for the registry shapes, table layout.

    Skips rows flagged corrupted_source (their quadrature cannot converge).
    """
    registry = pulse_shapes.catalogue()
    rows = []
    for name in (names if names is not None else sorted(registry)):
        shape = pulse_shapes.catalogue_lookup(name)
        if shape.is_corrupted:
            continue
        c = compute_coefficients(shape)
        row = {"name": name, "phi0": shape.phi0}
        row.update(c.table_row())
        rows.append(row)
    return rows
