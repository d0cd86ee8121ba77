"""Decoupling sequences: ordered pulse lists and the control rotation Q0(t).

Time-order convention
---------------------
Pulse lists here are *time-ordered*: the first entry acts first, and slot k
occupies the interval [(k-1) tau_p, k tau_p] with no gaps, so the period is
tau = n tau_p.  Note that the traditional operator notation for sequences
(strings like "X Y Xbar Y") reads right to left — the rightmost symbol acts
first — so a catalogue entry's DSL string is that notation reversed.

Rotation conventions (pinned by unit tests):

* R(n, phi) = exp(-phi [n x]); a pi rotation about x is diag(1, -1, -1).
* Composition is left-multiplication by newer rotations:
  Q0(t) = r_k(t_local) @ r_{k-1} @ ... @ r_1.
* A "bar" pulse is the same waveform with inverted sign (V -> -V), which for
  these shapes equals inverting the axis.
* Delta pulses contribute their full step rotation from the slot midpoint on.

The composite-pulse entries (12/24/48) are stored with the x-y handedness
that reproduces their closed-form averaged generators; this amounts to a
mirror y -> -y relative to the naive transcription of the usual notation
(equivalently, swapping the two composite blocks), and is covered by tests.

DSL
---
Configs may give a sequence as whitespace-separated tokens ``X Y -X -Y 0``,
each optionally carrying an angle override like ``X^{pi/2}``; ``0`` is a free
interval of one pulse duration.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from ._linalg import X_AXIS, Y_AXIS, rotation_matrix
from .errors import AngleMismatch, UnknownSequence
from .pulse_shapes import PulseShape, phase

_TOKEN_AXES = {"X": (X_AXIS, 1), "-X": (X_AXIS, -1),
               "Y": (Y_AXIS, 1), "-Y": (Y_AXIS, -1)}


@dataclass(frozen=True, eq=False)
class PulseInstance:
    """One applied pulse: a shape, a unit axis (+-x or +-y here), a sign."""

    shape: PulseShape
    axis: np.ndarray
    sign: int

    def __post_init__(self):
        a = np.array(self.axis, dtype=float).reshape(3)
        if abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise ValueError("pulse axis must be a unit vector")
        a.setflags(write=False)
        object.__setattr__(self, "axis", a)
        if self.sign not in (1, -1):
            raise ValueError("pulse sign must be +1 or -1")


@dataclass(frozen=True, eq=False)
class Sequence:
    """Named, fully expanded pulse train.

    `pulses` holds one entry per tau_p slot; None marks a free-evolution
    slot (the WaHuHa '0').  The period is tau = len(pulses) * tau_p.
    """

    name: str
    pulses: tuple[PulseInstance | None, ...]
    tau_p: float = 1.0

    @property
    def tau(self) -> float:
        return len(self.pulses) * self.tau_p

    @property
    def n_slots(self) -> int:
        return len(self.pulses)


def _negate(tokens: list[str]) -> list[str]:
    flip = {"X": "-X", "-X": "X", "Y": "-Y", "-Y": "Y", "0": "0"}
    return [flip[t] for t in tokens]


def _build_catalogue() -> dict[str, tuple[list[str], float | None]]:
    cat: dict[str, tuple[list[str], float | None]] = {}
    eight_s = ["X", "Y", "-X", "Y", "Y", "-X", "Y", "X"]
    cat["1"] = (["X"], math.pi)
    cat["2s"] = (["X", "X"], math.pi)
    cat["2a"] = (["X", "-X"], math.pi)
    cat["4a"] = (["X", "X", "-X", "-X"], math.pi)
    cat["4p"] = (["Y", "-X", "Y", "X"], math.pi)
    cat["8s"] = (eight_s, math.pi)
    cat["8a"] = (["-X", "-Y", "X", "-Y", "Y", "-X", "Y", "X"], math.pi)
    cat["16a"] = (eight_s + _negate(eight_s), math.pi)
    # pi/2 families
    cat["5"] = (["-X", "-Y", "0", "Y", "X"], math.pi / 2.0)
    comp_a = ["X", "-Y", "X"]   # composite block alpha
    comp_b = ["X", "Y", "X"]    # composite block beta
    twelve = comp_a + _negate(comp_b) + comp_a + comp_b
    cat["12"] = (twelve, math.pi / 2.0)
    cat["24"] = (twelve + twelve[::-1], math.pi / 2.0)
    half = (comp_b + comp_a + _negate(comp_b) + comp_a
            + _negate(comp_b) + _negate(comp_a) + comp_b + _negate(comp_a))
    cat["48"] = (half + half[::-1], math.pi / 2.0)
    # free evolution pseudo-sequence: one empty slot, any shape angle
    cat["none"] = (["0"], None)
    return cat


_CATALOGUE = _build_catalogue()
_SEQ_ALIASES = {"free": "none", "wahuha": "5", "16": "16a"}

#: catalogue names requiring pi pulses / pi/2 pulses
PI_SEQUENCES = ("1", "2s", "2a", "4a", "4p", "8s", "8a", "16a")
HALF_PI_SEQUENCES = ("5", "12", "24", "48")


def catalogue_names() -> list[str]:
    return sorted(_CATALOGUE)


def catalogue_dsl(name: str) -> str:
    """Canonical (time-ordered) DSL string for a catalogue sequence."""
    key = _SEQ_ALIASES.get(name, name)
    if key not in _CATALOGUE:
        raise UnknownSequence(f"unknown sequence {name!r}")
    return " ".join(_CATALOGUE[key][0])


def _instantiate(tokens: list[str], shape: PulseShape | None,
                 name: str) -> Sequence:
    pulses: list[PulseInstance | None] = []
    for tok in tokens:
        if tok == "0":
            pulses.append(None)
            continue
        if shape is None:
            raise UnknownSequence(
                f"sequence {name!r} has pulse slots but no shape was given")
        angle_override = None
        m = re.fullmatch(r"(-?[XY])(?:\^\{([^}]+)\})?", tok)
        if not m:
            raise UnknownSequence(f"bad sequence token {tok!r}")
        base, ang = m.group(1), m.group(2)
        if ang is not None:
            angle_override = {"pi": math.pi, "pi/2": math.pi / 2.0}.get(ang)
            if angle_override is None:
                angle_override = float(ang)
        axis, sign = _TOKEN_AXES[base]
        pulse_shape = shape if angle_override is None else shape.with_phi0(angle_override)
        pulses.append(PulseInstance(pulse_shape, axis, sign))
    tau_p = shape.tau_p if shape is not None else 1.0
    return Sequence(name, tuple(pulses), tau_p)


def catalogue_sequence(name: str, shape: PulseShape | None = None) -> Sequence:
    """Expand a named sequence with the given pulse shape.

    Raises UnknownSequence for unknown names and AngleMismatch when the
    shape's nominal angle does not fit the sequence family (pi for the
    inversion sequences, pi/2 for WaHuHa and the composite cycles).  The
    free-evolution sequence needs no shape.
    """
    key = _SEQ_ALIASES.get(name, name)
    if key not in _CATALOGUE:
        raise UnknownSequence(
            f"unknown sequence {name!r}; catalogue has: {', '.join(catalogue_names())}")
    tokens, required = _CATALOGUE[key]
    if required is not None:
        if shape is None:
            raise AngleMismatch(
                f"sequence {name!r} needs a pulse shape with phi0 = {required:.6f}")
        if abs(shape.phi0 - required) > 1e-9:
            raise AngleMismatch(
                f"sequence {name!r} needs phi0 = {required:.6f}, shape has {shape.phi0:.6f}")
    return _instantiate(tokens, shape, key)


def parse_dsl(text: str, shape: PulseShape, name: str = "custom") -> Sequence:
    """Build a sequence from DSL tokens (time-ordered, see module docstring)."""
    tokens = text.split()
    if not tokens:
        raise UnknownSequence("empty sequence DSL")
    return _instantiate(tokens, shape, name)


# ---------------------------------------------------------------------------
# control rotation

def slot_rotation(pulse: PulseInstance | None) -> np.ndarray:
    """Net rotation contributed by one completed slot."""
    if pulse is None:
        return np.eye(3)
    return rotation_matrix(pulse.axis, pulse.sign * pulse.shape.phi0)


def prefix_rotations(seq: Sequence) -> np.ndarray:
    """Array P of shape (n_slots + 1, 3, 3): P[k] = Q0 at the start of slot k.

    P[0] = 1 and P[n_slots] = Q0(tau).
    """
    out = np.empty((seq.n_slots + 1, 3, 3))
    out[0] = np.eye(3)
    for k, pulse in enumerate(seq.pulses):
        out[k + 1] = slot_rotation(pulse) @ out[k]
    return out


def residual_rotation(seq: Sequence) -> np.ndarray:
    """Q0(tau): identity for the multi-pulse catalogue entries."""
    return prefix_rotations(seq)[-1]


def control_rotation(seq: Sequence, t: float) -> np.ndarray:
    """Q0(t) for t in [0, tau]: completed slots composed with the running pulse.

    Delta pulses step at the slot midpoint (the step is taken at
    t_local >= tau_p / 2).
    """
    tau_p = seq.tau_p
    slop = 1e-12 * seq.tau
    if t < -slop or t > seq.tau + slop:
        raise ValueError(f"t = {t} outside the sequence period [0, {seq.tau}]")
    t = min(max(t, 0.0), seq.tau)
    k = min(int(t / tau_p), seq.n_slots - 1)
    t_loc = t - k * tau_p
    q = prefix_rotations(seq)[k]
    pulse = seq.pulses[k]
    if pulse is None:
        return q
    if pulse.shape.kind == "delta":
        angle = pulse.shape.phi0 if t_loc >= 0.5 * tau_p else 0.0
    else:
        angle = float(phase(pulse.shape, t_loc))
    return rotation_matrix(pulse.axis, pulse.sign * angle) @ q
