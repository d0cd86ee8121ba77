"""Command-line front end.

Verbs
-----
coeffs     print pulse-shape coefficient rows (CSV, table layout)
cumulants  average generator cumulants for one sequence/shape/model
simulate   run a JSON experiment config (fidelity CSVs + manifest)
preset     run a built-in preset by name, or list the presets
design     search for a Fourier shape meeting coefficient targets
verify     run the acceptance suite and emit a machine-readable report

Models on the command line are restricted to the z-axis dephasing form
(--gamma, --gamma-phi, --field); anisotropic rate matrices are a Python
API affair.  All times are in pulse-duration units.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .acceptance import CHECKS, AcceptanceOptions, run_all
from .errors import BlochddError, ConfigError
from .experiments import (PACKAGE_VERSION, coefficient_table_text,
                          list_presets, load_config, run)
from .magnus import cumulants
from .pulse_shapes import catalogue_lookup, make_delta
from .rate_model import RateModel
from .sequences import catalogue_sequence
from .shape_designer import DesignSpec, design

_DELTA_ALIASES = {
    "delta_pi": math.pi,
    "delta(pi)": math.pi,
    "delta_pi2": math.pi / 2.0,
    "delta_pi/2": math.pi / 2.0,
    "delta(pi/2)": math.pi / 2.0,
}


def _parse_angle(text: str) -> float:
    cleaned = text.strip().lower().replace(" ", "")
    if cleaned == "pi":
        return math.pi
    if cleaned in ("pi/2", "pi2"):
        return math.pi / 2.0
    try:
        return float(cleaned)
    except ValueError:
        raise ConfigError(f"cannot read angle {text!r}; use pi, pi/2 or a "
                          "number in radians", field="phi0") from None


def _parse_vector(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot read vector {text!r}", field="field") from None
    if len(parts) != 3:
        raise ConfigError("a static field needs exactly three comma-"
                          "separated components", field="field")
    return parts


def _parse_number(text: str) -> float:
    """Float parser that also accepts simple ratios such as 1/3."""
    if "/" in text:
        num, _, den = text.partition("/")
        try:
            return float(num) / float(den)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"cannot read value {text!r}",
                              field="target") from None
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot read value {text!r}", field="target") from None


def _resolve_shape(name: str):
    key = name.strip().lower()
    if key in _DELTA_ALIASES:
        return make_delta(_DELTA_ALIASES[key])
    return catalogue_lookup(name)


def _print_matrix(label: str, matrix) -> None:
    print(f"{label}:")
    for row in matrix:
        print("   " + "  ".join(f"{value: .10e}" for value in row))


# ---------------------------------------------------------------------------
# verb implementations


def _cmd_coeffs(args) -> int:
    names = None
    if args.shapes:
        names = []
        for name in args.shapes:
            key = name.strip().lower()
            if key in _DELTA_ALIASES:
                names.append("delta_pi" if _DELTA_ALIASES[key] == math.pi
                             else "delta_pi2")
                continue
            shape = catalogue_lookup(name)
            if shape.is_corrupted:
                print(f"note: {name} is flagged corrupted_source; its "
                      "coefficients are not computable and the row is "
                      "skipped", file=sys.stderr)
                continue
            names.append(name)
    text = coefficient_table_text(names)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_cumulants(args) -> int:
    shape = _resolve_shape(args.shape)
    seq = catalogue_sequence(args.sequence, shape)
    model = RateModel.nmr(args.gamma, args.gamma_phi,
                          B=_parse_vector(args.field))
    result = cumulants(seq, model)
    if args.json:
        print(json.dumps({
            "sequence": args.sequence,
            "shape": args.shape,
            "period": seq.tau,
            "gamma0": result.gamma0.tolist(),
            "gamma1": result.gamma1.tolist(),
            "residual_norm": result.residual_norm,
        }, indent=2))
        return 0
    print(f"sequence {args.sequence}  shape {args.shape}  "
          f"period {seq.tau:g} tau_p")
    _print_matrix("zeroth cumulant (rates per tau_p)", result.gamma0)
    _print_matrix("first cumulant", result.gamma1)
    print(f"quadrature residual {result.residual_norm:.3e}")
    return 0


def _run_config(source, args) -> int:
    raw = load_config(source).to_dict()
    if args.seed is not None:
        raw["seed"] = args.seed
    out_dir = Path(args.out) if args.out else Path("runs") / raw["name"]
    manifest = run(raw, out_dir, jobs=args.jobs, echo=print)
    jobs = manifest["jobs"]
    n_done = sum(job["status"] == "done" for job in jobs)
    print(f"{manifest['name']}: {manifest['status']}; "
          f"{n_done}/{len(jobs)} jobs done; output in {out_dir}")
    for job in jobs:
        if job["status"] != "done":
            print(f"  failed: {job['sequence']} x {job['shape']}: "
                  f"{job['error']}", file=sys.stderr)
    return 0 if manifest["status"] == "ok" else 1


def _cmd_simulate(args) -> int:
    return _run_config(args.config, args)


def _cmd_preset(args) -> int:
    if args.list or args.name is None:
        for name in list_presets():
            print(name)
        return 0
    return _run_config(args.name, args)


def _cmd_design(args) -> int:
    targets = {}
    for item in args.target:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"targets look like name=value, got {item!r}",
                              field="target")
        targets[key.strip()] = _parse_number(value.strip())
    spec = DesignSpec(phi0=_parse_angle(args.phi0),
                      n_harmonics=args.harmonics, smooth=args.smooth,
                      targets=targets, amp_bound=args.amp_bound)
    shape, achieved = design(spec, seed=args.seed, restarts=args.restarts)
    payload = {
        "kind": shape.kind,
        "phi0": shape.phi0,
        "smooth": shape.smooth,
        "fourier_coefficients": list(shape.coeffs),
        "coefficients": achieved.as_dict(),
        "seed": args.seed,
        "restarts": args.restarts,
    }
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
        print(f"wrote {args.out}")
    if args.json:
        print(json.dumps(payload, indent=2))
        return 0
    print(f"designed shape: phi0 = {shape.phi0:.12g}, smooth = "
          f"{shape.smooth}, {len(shape.coeffs) - 1} harmonics")
    print("  A_0..A_N: " + ", ".join(f"{a:.12g}" for a in shape.coeffs))
    for key, value in achieved.as_dict().items():
        marker = "  <- target" if key in targets else ""
        print(f"  {key:8s} = {value: .12e}{marker}")
    return 0


def _cmd_verify(args) -> int:
    known = {index for index, _, _ in CHECKS}
    indices = None
    if args.criterion:
        indices = tuple(args.criterion)
        unknown = sorted(set(indices) - known)
        if unknown:
            raise ConfigError(f"no such criterion: {unknown}; valid indices "
                              f"are {sorted(known)}", field="criterion")
    kwargs = {}
    if args.dt is not None:
        kwargs["dt"] = args.dt
    if args.ensemble is not None:
        kwargs["ensemble"] = args.ensemble
    if args.seed is not None:
        kwargs["seed"] = args.seed
    options = AcceptanceOptions(**kwargs)
    echo = None if args.json else print
    results = run_all(indices=indices, echo=echo, options=options)
    n_pass = sum(result.passed for result in results)
    report = {
        "passed": bool(results) and n_pass == len(results),
        "options": {"dt": options.dt, "ensemble": options.ensemble,
                    "seed": options.seed},
        "criteria": [result.to_dict() for result in results],
    }
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(f"{n_pass}/{len(results)} criteria passed")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
        if not args.json:
            print(f"report written to {args.out}")
    return 0 if report["passed"] else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blochdd",
        description="Pulse-sequence simulation and pulse-shape design for a "
                    "dissipative qubit (Bloch-vector picture).")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {PACKAGE_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="print shape coefficient rows (CSV)")
    p.add_argument("shapes", nargs="*",
                   help="registry names (default: every row, delta first)")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=_cmd_coeffs)

    p = sub.add_parser("cumulants",
                       help="average generator cumulants for one combination")
    p.add_argument("sequence", help="sequence name, e.g. 4p, 8s, 16a")
    p.add_argument("shape", help="shape name, e.g. delta_pi, G_0.10_pi")
    p.add_argument("--gamma", type=float, default=0.0,
                   help="transverse rate per tau_p (default 0)")
    p.add_argument("--gamma-phi", type=float, default=0.0,
                   help="dephasing rate per tau_p (default 0)")
    p.add_argument("--field", default="0,0,0",
                   help="static field Bx,By,Bz per tau_p (default 0,0,0)")
    p.add_argument("--json", action="store_true",
                   help="emit JSON instead of formatted matrices")
    p.set_defaults(func=_cmd_cumulants)

    p = sub.add_parser("simulate", help="run an experiment config file")
    p.add_argument("config", help="path to a JSON config (or a preset name)")
    p.add_argument("--out", help="output directory (default runs/<name>)")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes (default 1)")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config's master noise seed")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("preset", help="run a built-in preset")
    p.add_argument("name", nargs="?", help="preset name (omit to list)")
    p.add_argument("--list", action="store_true", help="list preset names")
    p.add_argument("--out", help="output directory (default runs/<name>)")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes (default 1)")
    p.add_argument("--seed", type=int, default=None,
                   help="override the preset's master noise seed")
    p.set_defaults(func=_cmd_preset)

    p = sub.add_parser("design",
                       help="search for a Fourier shape meeting targets")
    p.add_argument("--phi0", required=True, help="rotation angle: pi, pi/2 "
                   "or radians")
    p.add_argument("--harmonics", type=int, required=True,
                   help="number of sine harmonics")
    p.add_argument("--smooth", type=int, default=0, choices=(0, 1, 2),
                   help="endpoint smoothness class (default 0)")
    p.add_argument("--target", action="append", default=[],
                   metavar="NAME=VALUE",
                   help="coefficient target, repeatable (e.g. upsilon=0, "
                        "upsilon2=1/3)")
    p.add_argument("--amp-bound", type=float, default=None,
                   help="soft cap on |V| in 1/tau_p units")
    p.add_argument("--seed", type=int, default=0,
                   help="search seed (default 0)")
    p.add_argument("--restarts", type=int, default=16,
                   help="random restarts (default 16)")
    p.add_argument("--json", action="store_true", help="emit JSON")
    p.add_argument("--out", help="also write the JSON description here")
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--criterion", type=int, nargs="*", default=None,
                   help="restrict to these criterion indices")
    p.add_argument("--dt", type=float, default=None,
                   help="override the integrator step (guardrails still "
                        "apply and violations show up as failures)")
    p.add_argument("--ensemble", type=int, default=None,
                   help="override the ensemble size (default 400)")
    p.add_argument("--seed", type=int, default=None,
                   help="override the preset noise seed")
    p.add_argument("--json", action="store_true",
                   help="print the JSON report instead of per-line output")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BlochddError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
