"""Correlated Gaussian field realizations.

The slow environment is a three-component, zero-mean, stationary Gaussian
process with

    <B_mu(t) B_nu(t')> = delta_{mu nu} * B0^2 * g(t - t'),
    g(t) = exp(-t^2 / (2 tau_c^2)),

sampled on a uniform grid.  Synthesis is spectral: the target covariance is
embedded in a circulant on a periodic extension padded to at least
T_total + 8 tau_c, whose eigenvalues (the DFT of the covariance sequence)
are floored at zero to absorb negative round-off.  A Cholesky factorization
of the squared-exponential covariance would be numerically ill-conditioned
at this grid density, which is why the FFT route is used.

Each component draws from its own stream derived from the master seed by a
fixed offset, so realizations are reproducible and components mutually
independent.  Ensemble members use seeds master + m.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, GridTooCoarse

_HEADER = struct.Struct("<5d")  # N, dt, B0, tau_c, seed
_SEED_MOD = 2**64


@dataclass(frozen=True)
class NoiseSpec:
    """Parameters of the field process; times in pulse-duration units."""

    B0: float
    tau_c: float
    dt: float
    T_total: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.B0 < 0:
            raise ConfigError("B0 must be >= 0", field="B0")
        if self.tau_c <= 0:
            raise ConfigError("tau_c must be > 0", field="tau_c")
        if self.dt <= 0:
            raise ConfigError("dt must be > 0", field="dt")
        if self.T_total <= 0:
            raise ConfigError("T_total must be > 0", field="T_total")

    @property
    def n_samples(self) -> int:
        """Grid size covering [0, T_total] inclusive."""
        return int(round(self.T_total / self.dt)) + 1


@dataclass(frozen=True)
class NoiseRealization:
    """One draw of the three-component field on the uniform grid."""

    spec: NoiseSpec
    samples: np.ndarray  # (3, N)

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.shape != (3, self.spec.n_samples):
            raise ConfigError(
                f"samples shape {samples.shape} != (3, {self.spec.n_samples})")
        if not np.all(np.isfinite(samples)):
            raise ConfigError("samples must be finite")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def times(self) -> np.ndarray:
        return self.spec.dt * np.arange(self.spec.n_samples)

    def values_at(self, t: np.ndarray) -> np.ndarray:
        """Linearly interpolated field, shape (3,) + t.shape."""
        t = np.asarray(t, dtype=float)
        idx = t / self.spec.dt
        return _interp_block(self.samples[None], idx)[0]


def _interp_block(samples: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Linear interpolation of (E, 3, N) samples at fractional indices."""
    n = samples.shape[-1]
    lo = np.clip(np.floor(idx).astype(int), 0, n - 2)
    frac = np.clip(idx - lo, 0.0, 1.0)
    return samples[..., lo] * (1.0 - frac) + samples[..., lo + 1] * frac


def _circulant_eigenvalues(spec: NoiseSpec) -> tuple[np.ndarray, int]:
    n = spec.n_samples
    n_pad = n + int(np.ceil(8.0 * spec.tau_c / spec.dt))
    m = 2 * (n_pad - 1)
    lags = spec.dt * np.arange(n_pad)
    cov = spec.B0**2 * np.exp(-(lags**2) / (2.0 * spec.tau_c**2))
    ring = np.concatenate([cov, cov[-2:0:-1]])
    lam = np.fft.fft(ring).real
    return np.maximum(lam, 0.0), m


def _component_rng(seed: int, component: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed % _SEED_MOD, spawn_key=(component,)))


def generate(spec: NoiseSpec) -> NoiseRealization:
    """Draw one realization; deterministic for a given (spec, seed)."""
    if spec.dt > spec.tau_c / 4.0:
        raise GridTooCoarse(
            f"dt = {spec.dt:g} under-resolves tau_c = {spec.tau_c:g}"
            " (need dt <= tau_c / 4)")
    n = spec.n_samples
    if spec.B0 == 0.0:
        return NoiseRealization(spec, np.zeros((3, n)))
    lam, m = _circulant_eigenvalues(spec)
    amp = np.sqrt(lam)
    out = np.empty((3, n))
    for mu in range(3):
        rng = _component_rng(spec.seed, mu)
        z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        w = np.fft.ifft(amp * z) * np.sqrt(m)
        out[mu] = w.real[:n]
    return NoiseRealization(spec, out)


def member_spec(spec: NoiseSpec, member: int) -> NoiseSpec:
    """Spec for ensemble member `member`: seed offset by the member index."""
    return replace(spec, seed=(spec.seed + member) % _SEED_MOD)


def generate_block(spec: NoiseSpec, members: range) -> np.ndarray:
    """Realizations for a contiguous member range, shape (len, 3, N)."""
    out = np.empty((len(members), 3, spec.n_samples))
    for i, member in enumerate(members):
        out[i] = generate(member_spec(spec, member)).samples
    return out


def autocovariance(real: NoiseRealization, lag_steps: int,
                   mu: int = 0, nu: int | None = None) -> float:
    """Single-realization estimate of <B_mu(t) B_nu(t + lag)>."""
    if nu is None:
        nu = mu
    n = real.spec.n_samples
    if not 0 <= lag_steps < n:
        raise ValueError("lag_steps out of range")
    a = real.samples[mu, : n - lag_steps]
    b = real.samples[nu, lag_steps:]
    return float(np.mean(a * b))


def dump(real: NoiseRealization, path: str) -> None:
    """Binary dump: little-endian float64 header (N, dt, B0, tau_c, seed)
    followed by the (3, N) samples row-major.  Seeds above 2**53 lose
    precision in the float header; ensemble seeds here stay far below that.
    """
    spec = real.spec
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(float(spec.n_samples), spec.dt, spec.B0,
                              spec.tau_c, float(spec.seed)))
        fh.write(real.samples.astype("<f8").tobytes())


def load(path: str) -> NoiseRealization:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        n_f, dt, b0, tau_c, seed_f = _HEADER.unpack(raw)
        n = int(round(n_f))
        samples = np.frombuffer(fh.read(3 * n * 8), dtype="<f8").reshape(3, n)
    spec = NoiseSpec(B0=b0, tau_c=tau_c, dt=dt, T_total=(n - 1) * dt,
                     seed=int(round(seed_f)))
    return NoiseRealization(spec, samples.astype(float))
