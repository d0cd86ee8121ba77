"""Batch experiment runner: presets, config files, CSV series, manifests.

A run is described by a JSON config (or a named built-in preset) listing
sequences, pulse shapes, the dissipation model, the slow-noise parameters
and what reference columns to emit.  ``run`` fans out over every
(sequence, shape) combination, writes one fidelity CSV per combination
plus a manifest recording seeds, versions and job status.  Identical
config and seed reproduce byte-identical CSV bodies; wall-clock
timestamps appear only in the manifest.
"""
from __future__ import annotations

import dataclasses
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import lru_cache
from importlib import resources
from importlib.metadata import PackageNotFoundError, version as _dist_version
from pathlib import Path

import numpy as np
import scipy

from .errors import ConfigError
from .fidelity import (FidelitySeries, fidelity_from_trace, ideal_fidelity,
                       member_fidelities, redistribution_fidelity)
from .noise import NoiseSpec
from .propagator import auto_dt, propagate, propagate_ensemble
from .pulse_shapes import PulseShape, catalogue_lookup, make_delta
from .rate_model import RateModel
from .sequences import catalogue_sequence
from .shape_coeffs import TABLE_COLUMNS, compute_coefficients, table_csv_rows
from .shape_designer import DesignSpec, design

try:
    PACKAGE_VERSION = _dist_version("blochdd")
except PackageNotFoundError:  # running from a source tree without install
    PACKAGE_VERSION = "0+untracked"

_EMIT_KEYS = ("ideal", "redistribution", "baseline", "single")
_KINDS = ("fidelity", "table")


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved description of one batch run.

    Rates and fields are in 1/tau_p units, times in tau_p units.  `noise`
    is None for runs without the slow classical field; `dt` overrides the
    per-sequence automatic integrator step when set.
    """

    name: str
    kind: str = "fidelity"
    sequences: tuple = ()
    shapes: tuple = ()
    designed: dict = field(default_factory=dict)
    gamma: float = 0.0
    gamma_phi: float = 0.0
    b_static: tuple = (0.0, 0.0, 0.0)
    noise: dict | None = None
    t_max: float = 512.0
    ensemble: int = 400
    seed: int = 0
    dt: float | None = None
    emit: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ConfigError(f"kind must be one of {_KINDS}", field="kind")
        if self.kind == "fidelity":
            if not self.sequences:
                raise ConfigError("no sequences listed", field="sequences")
            if not self.shapes:
                raise ConfigError("no shapes listed", field="shapes")
            if self.t_max <= 0:
                raise ConfigError("t_max must be positive", field="t_max")
            if self.ensemble < 1:
                raise ConfigError("ensemble must be >= 1", field="ensemble")
        if self.noise is not None:
            for key in ("B0", "tau_c"):
                if key not in self.noise:
                    raise ConfigError(f"noise block needs {key}", field="noise")
        for key in self.emit:
            if key not in _EMIT_KEYS:
                raise ConfigError(f"unknown emit flag {key!r} "
                                  f"(known: {_EMIT_KEYS})", field="emit")
        for name, spec in self.designed.items():
            _design_spec_of(_freeze(spec))  # validate eagerly

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {"name", "kind", "sequences", "shapes", "designed_shapes",
                 "model", "noise", "t_max", "ensemble", "seed", "dt", "emit"}
        for key in raw:
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}", field=key)
        if "name" not in raw:
            raise ConfigError("config needs a name", field="name")
        model = raw.get("model", {})
        if not isinstance(model, dict):
            raise ConfigError("model must be an object", field="model")
        b = tuple(float(x) for x in model.get("B", (0.0, 0.0, 0.0)))
        if len(b) != 3:
            raise ConfigError("model.B must have three components",
                              field="model")
        noise = raw.get("noise")
        if noise is not None:
            if not isinstance(noise, dict):
                raise ConfigError("noise must be an object", field="noise")
            noise = dict(noise)
            noise.setdefault("dt", 1.0 / 32.0)
        designed = raw.get("designed_shapes", {})
        if not isinstance(designed, dict):
            raise ConfigError("designed_shapes must be an object",
                              field="designed_shapes")
        emit = raw.get("emit", {})
        if not isinstance(emit, dict):
            raise ConfigError("emit must be an object of boolean flags",
                              field="emit")
        return cls(
            name=str(raw["name"]),
            kind=str(raw.get("kind", "fidelity")),
            sequences=tuple(raw.get("sequences", ())),
            shapes=tuple(raw.get("shapes", ())),
            designed=dict(designed),
            gamma=float(model.get("gamma", 0.0)),
            gamma_phi=float(model.get("gamma_phi", 0.0)),
            b_static=b,
            noise=noise,
            t_max=float(raw.get("t_max", 512.0)),
            ensemble=int(raw.get("ensemble", 400)),
            seed=int(raw.get("seed", 0)),
            dt=None if raw.get("dt") is None else float(raw["dt"]),
            emit=dict(emit),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "sequences": list(self.sequences),
            "shapes": list(self.shapes),
            "designed_shapes": self.designed,
            "model": {"gamma": self.gamma, "gamma_phi": self.gamma_phi,
                      "B": list(self.b_static)},
            "noise": self.noise,
            "t_max": self.t_max,
            "ensemble": self.ensemble,
            "seed": self.seed,
            "dt": self.dt,
            "emit": self.emit,
        }

    def model(self) -> RateModel:
        return RateModel.nmr(self.gamma, self.gamma_phi, B=self.b_static)


def list_presets() -> list[str]:
    """Names of the built-in presets."""
    root = resources.files("blochdd").joinpath("presets")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _read_raw(source: str | Path) -> dict:
    path = Path(source)
    if path.suffix == ".json" and path.exists():
        text = path.read_text()
    else:
        res = resources.files("blochdd").joinpath(f"presets/{source}.json")
        try:
            text = res.read_text()
        except (FileNotFoundError, OSError):
            raise ConfigError(
                f"no such config file or preset: {source!r} "
                f"(presets: {', '.join(list_presets())})", field="config")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {source} is not valid JSON: {exc}",
                          field="config")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object", field="config")
    return raw


def _merge(parent: dict, child: dict) -> dict:
    out = dict(parent)
    for key, value in child.items():
        if key == "extends":
            continue
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            merged = dict(out[key])
            merged.update(value)
            out[key] = merged
        else:
            out[key] = value
    return out


def load_config(source: str | Path | dict) -> ExperimentConfig:
    """Load a config from a path, preset name or plain dict.

    Follows "extends" chains (preset name or sibling file path); child
    values win, one level of dict merge for model/noise/emit blocks.
    """
    raw = dict(source) if isinstance(source, dict) else _read_raw(source)
    seen: list[str] = []
    base_dir = Path(source).parent if isinstance(source, (str, Path)) \
        and Path(str(source)).suffix == ".json" else None
    while "extends" in raw:
        parent_name = str(raw["extends"])
        if parent_name in seen:
            raise ConfigError(f"extends cycle through {parent_name!r}",
                              field="extends")
        seen.append(parent_name)
        candidate = (base_dir / parent_name) if base_dir else Path(parent_name)
        parent = _read_raw(candidate if candidate.suffix == ".json"
                           and candidate.exists() else parent_name)
        raw = _merge(parent, raw)
    return ExperimentConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# shape resolution

def _parse_angle(value) -> float:
    if isinstance(value, str):
        text = value.strip().lower()
        if text == "pi":
            return math.pi
        if text in ("pi/2", "pi2"):
            return math.pi / 2.0
        raise ConfigError(f"unknown angle {value!r} (use 'pi', 'pi/2' or a "
                          "number in radians)", field="phi0")
    return float(value)


def _freeze(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def _design_spec_of(frozen: str) -> tuple[DesignSpec, int, int]:
    d = json.loads(frozen)
    extra = set(d) - {"phi0", "n_harmonics", "smooth", "targets",
                      "amp_bound", "seed", "restarts"}
    if extra:
        raise ConfigError(f"unknown designed-shape keys {sorted(extra)}",
                          field="designed_shapes")
    spec = DesignSpec(
        phi0=_parse_angle(d.get("phi0", math.pi)),
        n_harmonics=int(d["n_harmonics"]),
        smooth=int(d.get("smooth", 0)),
        targets={k: float(v) for k, v in d.get("targets", {}).items()},
        amp_bound=None if d.get("amp_bound") is None else float(d["amp_bound"]),
    )
    return spec, int(d.get("seed", 0)), int(d.get("restarts", 16))


@lru_cache(maxsize=None)
def _designed_shape(frozen: str, name: str) -> PulseShape:
    spec, seed, restarts = _design_spec_of(frozen)
    shape, _ = design(spec, seed=seed, restarts=restarts)
    return dataclasses.replace(shape, name=name)


def resolve_shape(cfg: ExperimentConfig, name: str) -> PulseShape:
    """Turn a config shape label into a PulseShape.

    Labels are designed-shape names from the config, ``delta_pi`` /
    ``delta_pi2`` for ideal pulses, or registry names/aliases.
    """
    if name in cfg.designed:
        return _designed_shape(_freeze(cfg.designed[name]), name)
    low = name.lower()
    if low in ("delta_pi", "delta(pi)"):
        return make_delta(math.pi)
    if low in ("delta_pi2", "delta_pi/2", "delta(pi/2)"):
        return make_delta(math.pi / 2.0)
    return catalogue_lookup(name)


# ---------------------------------------------------------------------------
# jobs

def _combo_label(seq_name: str, shape_name: str) -> str:
    text = f"{seq_name}__{shape_name}"
    return "".join("-" if c in "/\\ " else c for c in text)


def _periods(t_max: float, tau: float) -> int:
    n = round(t_max / tau)
    if n < 1 or abs(n * tau - t_max) > 1e-9 * max(1.0, t_max):
        raise ConfigError(
            f"t_max = {t_max:g} is not a whole number of periods "
            f"(tau = {tau:g})", field="t_max")
    return n


def _run_combo(cfg: ExperimentConfig, seq_name: str, shape_name: str) -> dict:
    model = cfg.model()
    shape = resolve_shape(cfg, shape_name)
    seq = catalogue_sequence(seq_name, shape)
    n_periods = _periods(cfg.t_max, seq.tau)
    dt = cfg.dt if cfg.dt is not None else auto_dt(seq)
    label = _combo_label(seq_name, shape_name)

    baseline = propagate(seq, model, n_periods=n_periods, dt=dt)
    times = baseline.times
    f0 = fidelity_from_trace(baseline.Q)

    ideal = ideal_fidelity(times, cfg.gamma_phi) if cfg.emit.get("ideal") \
        else None
    redist = None
    if cfg.emit.get("redistribution"):
        ups2 = -1.0 if all(p is None for p in seq.pulses) \
            else compute_coefficients(shape).upsilon2
        redist = redistribution_fidelity(times, cfg.gamma_phi, ups2)

    files: dict[str, str] = {}
    meta = {"sequence": seq_name, "shape": shape_name, "dt": dt}
    if cfg.noise is None:
        series = FidelitySeries(times, f0, None, ideal, redist,
                                metadata=dict(meta))
        files[f"{label}.csv"] = series.to_csv()
        summary = {"F_final": float(f0[-1])}
    else:
        spec = NoiseSpec(B0=float(cfg.noise["B0"]),
                         tau_c=float(cfg.noise["tau_c"]),
                         dt=float(cfg.noise["dt"]),
                         T_total=n_periods * seq.tau, seed=cfg.seed)
        stack = propagate_ensemble(seq, model, spec, cfg.ensemble,
                                   n_periods, dt=dt)
        fids = member_fidelities(stack)
        f_avg = fids.mean(axis=0)
        stderr = None
        if cfg.ensemble > 1:
            stderr = fids.std(axis=0, ddof=1) / math.sqrt(cfg.ensemble)
        delta = f0 - f_avg if cfg.emit.get("baseline") else None
        series = FidelitySeries(times, f_avg, stderr, ideal, redist, delta,
                                metadata=dict(meta, ensemble=cfg.ensemble))
        files[f"{label}.csv"] = series.to_csv()
        if cfg.emit.get("single"):
            single = FidelitySeries(times, fids[0], None, ideal, redist,
                                    metadata=dict(meta, member=0))
            files[f"{label}__single.csv"] = single.to_csv()
        summary = {"F_final": float(f_avg[-1])}
        if stderr is not None:
            summary["stderr_final"] = float(stderr[-1])
        if delta is not None:
            summary["delta_F_final"] = float(delta[-1])
    return {"sequence": seq_name, "shape": shape_name, "dt": dt,
            "files": files, "summary": summary}


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if abs(value - math.pi) < 1e-12:
        return "pi"
    if abs(value - math.pi / 2.0) < 1e-12:
        return "pi/2"
    return f"{value:.8g}"


def coefficient_table_text(names: list[str] | None = None) -> str:
    """CSV text of the coefficient table: delta rows first, then shapes.

    `names` restricts the output to those rows; `delta_pi` and
    `delta_pi2` select the instantaneous-pulse rows.  Shapes flagged
    corrupted_source are skipped, matching `table_csv_rows`.
    """
    wanted = None if names is None else list(names)
    rows = []
    for tag, phi0 in (("delta_pi", math.pi), ("delta_pi2", math.pi / 2.0)):
        if wanted is None or tag in wanted:
            c = compute_coefficients(make_delta(phi0))
            row = {"name": tag, "phi0": phi0}
            row.update(c.table_row())
            rows.append(row)
    if wanted is None:
        rows.extend(table_csv_rows())
    else:
        rest = [n for n in wanted if n not in ("delta_pi", "delta_pi2")]
        if rest:
            rows.extend(table_csv_rows(rest))
    lines = [",".join(TABLE_COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_cell(row[col]) for col in TABLE_COLUMNS))
    return "\n".join(lines) + "\n"


def _run_table(cfg: ExperimentConfig) -> dict:
    text = coefficient_table_text()
    return {"sequence": "table", "shape": "", "dt": None,
            "files": {"coefficients.csv": text},
            "summary": {"rows": text.count("\n") - 1}}


def _job_worker(args: tuple) -> dict:
    cfg_json, seq_name, shape_name = args
    t0 = time.perf_counter()
    try:
        cfg = ExperimentConfig.from_dict(json.loads(cfg_json))
        if seq_name == "__table__":
            result = _run_table(cfg)
        else:
            result = _run_combo(cfg, seq_name, shape_name)
        result["status"] = "done"
    except Exception as exc:  # job isolation: report, don't abort the batch
        result = {"sequence": seq_name, "shape": shape_name, "dt": None,
                  "files": {}, "summary": {},
                  "status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    result["runtime_s"] = round(time.perf_counter() - t0, 3)
    return result


# ---------------------------------------------------------------------------
# orchestration

def run(config: ExperimentConfig | str | Path | dict, out_dir: str | Path,
        jobs: int = 1, echo=None) -> dict:
    """Execute every job of a config and write CSVs plus manifest.json.

    Returns the manifest dict; manifest["status"] is "ok" only if every
    job finished.  Individual job failures are recorded, not raised.
    """
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.kind == "table":
        job_list = [("__table__", "")]
    else:
        job_list = [(s, sh) for s in cfg.sequences for sh in cfg.shapes]
    cfg_json = json.dumps(cfg.to_dict())
    args = [(cfg_json, s, sh) for s, sh in job_list]

    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_job_worker, args))
    else:
        results = []
        for a in args:
            result = _job_worker(a)
            results.append(result)
            if echo is not None:
                tag = result.get("error", f"{result['runtime_s']:.1f}s")
                echo(f"  [{result['status']}] {result['sequence']} "
                     f"{result['shape']} ({tag})")

    job_rows = []
    for result in results:
        for fname, text in result["files"].items():
            (out / fname).write_text(text)
        row = {k: result[k] for k in
               ("sequence", "shape", "dt", "status", "runtime_s", "summary")}
        row["files"] = sorted(result["files"])
        if "error" in result:
            row["error"] = result["error"]
        job_rows.append(row)

    n_failed = sum(r["status"] != "done" for r in job_rows)
    manifest = {
        "name": cfg.name,
        "status": "ok" if n_failed == 0 else f"partial ({n_failed} failed)",
        "created": datetime.now(timezone.utc).isoformat(),
        "versions": {"blochdd": PACKAGE_VERSION,
                     "numpy": np.__version__,
                     "scipy": scipy.__version__,
                     "python": sys.version.split()[0]},
        "seeds": {"noise_master": cfg.seed,
                  "noise_member_rule": "master_seed + member_index",
                  "designed": {name: spec.get("seed", 0)
                               for name, spec in cfg.designed.items()}},
        "tolerances": {"coefficient_quadrature": 1e-10,
                       "cumulant_quadrature": 1e-6,
                       "design_residual": 1e-6},
        "config": cfg.to_dict(),
        "jobs": job_rows,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest
