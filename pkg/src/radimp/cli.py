"""Command-line interface.

    radimp sweep --kind rect2d --aspect 4 --ka-min 0.2 --ka-max 12 --points 60
    radimp oracle-check --kind circ --ka 1 --mesh-n 64
    radimp compare-profile --grid fem.csv --kind rect2d --aspect 1 --mirror

Exit codes: 0 success, 1 usage or input error, 2 a result failed its
check (a sweep point did not converge, or the oracle disagreed).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .impedance import SweepSpec, radiation_impedance, sweep
from .oracle import (
    MeshTooLarge,
    PreconditionError,
    bruteforce_impedance,
    build_mesh,
    piston_impedance,
)
from .profiles import GridError, are, load_grid, model_for
from .quadrature import DEFAULT_TOLERANCE, Tolerance
from .radiator import RadiatorKind, RadiatorSpec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2

CSV_COLUMNS = ("ka", "r", "x", "converged", "validity_flag")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text):
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a finite positive number, got {text!r}")
    return v


def _count(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _default_jobs():
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def make_spec(kind: str, aspect: float) -> RadiatorSpec:
    kind = RadiatorKind(kind)
    if kind is RadiatorKind.RECT2D:
        return RadiatorSpec.rect2d(aspect)
    if kind is RadiatorKind.RECT1D:
        return RadiatorSpec.rect1d(aspect)
    return RadiatorSpec.circular()


# --------------------------------------------------------------------------
# config file: flat key = value lines, '#' comments

SWEEP_KEYS = {
    "kind": (lambda s: RadiatorKind(s).value, None),
    "aspect": (_positive, 1.0),
    "ka_min": (_positive, 0.1),
    "ka_max": (_positive, 10.0),
    "points": (_count, 100),
    "spacing": (str, "linear"),
    "tol_rel": (_positive, DEFAULT_TOLERANCE.rel),
    "format": (str, "csv"),
    "out": (str, None),
    "jobs": (_count, None),
}


def read_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    out = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}: line {line_no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SWEEP_KEYS:
            raise UsageError(f"{path}: line {line_no}: unknown key {key!r}")
        convert = SWEEP_KEYS[key][0]
        try:
            out[key] = convert(value)
        except (ValueError, argparse.ArgumentTypeError):
            raise UsageError(f"{path}: line {line_no}: bad value {value!r} for {key}") from None
    return out


def resolve_sweep_options(args) -> dict:
    """Flags win over the config file, which wins over built-in defaults."""
    config = read_config(args.config) if args.config else {}
    opts = {}
    for key, (_, default) in SWEEP_KEYS.items():
        flag = getattr(args, key)
        opts[key] = flag if flag is not None else config.get(key, default)
    if opts["kind"] is None:
        raise UsageError("--kind is required (on the command line or in the config file)")
    if opts["spacing"] not in ("linear", "log"):
        raise UsageError(f"spacing must be linear or log, got {opts['spacing']!r}")
    if opts["format"] not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {opts['format']!r}")
    if opts["jobs"] is None:
        opts["jobs"] = _default_jobs()
    return opts


# --------------------------------------------------------------------------
# output

def _num(v: float) -> str:
    return format(v, ".12g")


def format_csv(curve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in curve.points:
        w.writerow([_num(p.ka), _num(p.r), _num(p.x), str(p.converged).lower(), p.validity_flag])
    return buf.getvalue()


def format_json(curve) -> str:
    spec = curve.spec
    doc = {
        "kind": spec.kind.value,
        "aspect": spec.aspect,
        "normalization": curve.points[0].normalization.value if curve.points else None,
        "tolerance": {"rel": curve.tol.rel, "abs": curve.tol.abs},
        "columns": list(CSV_COLUMNS),
        "points": [
            {
                "ka": float(_num(p.ka)),
                "r": float(_num(p.r)),
                "x": float(_num(p.x)),
                "converged": p.converged,
                "validity_flag": p.validity_flag,
            }
            for p in curve.points
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


# --------------------------------------------------------------------------
# commands

def cmd_sweep(args) -> int:
    opts = resolve_sweep_options(args)
    spec = make_spec(opts["kind"], opts["aspect"])
    try:
        sweep_spec = SweepSpec(
            ka_min=opts["ka_min"],
            ka_max=opts["ka_max"],
            n_points=opts["points"],
            spacing=opts["spacing"],
            tol=Tolerance(rel=opts["tol_rel"], abs=DEFAULT_TOLERANCE.abs),
            output_format=opts["format"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    out = opts["out"]
    fh = None
    if out is not None and out != "-":
        try:
            fh = open(out, "w", newline="")
        except OSError as exc:
            print(f"radimp: cannot write {out}: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_USAGE
    try:
        curve = sweep(spec, sweep_spec, jobs=opts["jobs"])
        text = format_csv(curve) if sweep_spec.output_format == "csv" else format_json(curve)
        (fh or sys.stdout).write(text)
    finally:
        if fh is not None:
            fh.close()
    bad = sum(not p.converged for p in curve.points)
    if bad:
        print(f"radimp: {bad} of {len(curve.points)} points did not converge", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def _rel(a, b):
    return abs(a - b) / abs(b)


def cmd_oracle_check(args) -> int:
    if args.piston:
        return _piston_check(args)
    spec = make_spec(args.kind, args.aspect)
    mesh = build_mesh(spec, args.mesh_n)
    ref = bruteforce_impedance(mesh, args.ka)
    z = radiation_impedance(spec, args.ka)
    dr, dx = _rel(z.r, ref.r), _rel(z.x, ref.x)
    print(f"kind {spec.kind.value}  aspect {spec.aspect:g}  ka {args.ka:g}  mesh {mesh.nx}x{mesh.ny} ({mesh.size} panels)")
    print(f"spectral  r = {_num(z.r)}  x = {_num(z.x)}  converged = {str(z.converged).lower()}")
    print(f"oracle    r = {_num(ref.r)}  x = {_num(ref.x)}")
    print(f"rel diff  r = {dr:.3e}  x = {dx:.3e}  (max {args.max_rel:g})")
    ok = dr <= args.max_rel and dx <= args.max_rel
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAILED


def _piston_check(args) -> int:
    spec = RadiatorSpec.circular()
    mesh = build_mesh(spec, args.mesh_n)
    mesh = mesh.with_velocities(1.0)
    ref = bruteforce_impedance(mesh, args.ka)
    r_exact, x_exact = piston_impedance(args.ka)
    baseline = 0.5 * args.ka**2
    dr = _rel(ref.r, r_exact)
    print(f"piston self-test  ka {args.ka:g}  mesh {mesh.nx}x{mesh.ny} ({mesh.size} panels)")
    print(f"oracle    r = {_num(ref.r)}  x = {_num(ref.x)}")
    print(f"exact     r = {_num(r_exact)}  x = {_num(x_exact)}")
    print(f"baseline  (ka)^2/2 = {_num(baseline)}")
    print(f"rel diff  r = {dr:.3e}  (max {args.max_rel:g})")
    ok = dr <= args.max_rel
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_compare_profile(args) -> int:
    path = Path(args.grid)
    if not path.is_file():
        print(f"radimp: grid file not found: {path}", file=sys.stderr)
        return EXIT_USAGE
    grid = load_grid(path, mirror=args.mirror)
    half = args.half_width
    if half is None:
        half = float(max(abs(grid.xs[0]), abs(grid.xs[-1])))
    kind = RadiatorKind(args.kind)
    if kind is RadiatorKind.CIRCULAR:
        spec = RadiatorSpec.circular(half)
    else:
        spec = RadiatorSpec(kind, half, args.aspect * half)
    value = are(grid, model_for(spec))
    v = grid.values
    print(f"grid {v.shape[0]}x{v.shape[1]}  x [{grid.xs[0]:g}, {grid.xs[-1]:g}]  y [{grid.ys[0]:g}, {grid.ys[-1]:g}]")
    print(f"peak |v| {float(np.max(np.abs(v))):.6g}  model {spec.kind.value} a={spec.half_width:g} aspect={spec.aspect:g}")
    print(f"ARE {100 * value:.2f}%")
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="radimp", description="Radiation impedance of clamped membranes.")
    sub = parser.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in RadiatorKind]

    p = sub.add_parser("sweep", help="impedance over a ka grid")
    p.add_argument("--kind", choices=kinds)
    p.add_argument("--aspect", type=_positive, help="b/a for rectangles (default 1)")
    p.add_argument("--ka-min", dest="ka_min", type=_positive)
    p.add_argument("--ka-max", dest="ka_max", type=_positive)
    p.add_argument("--points", type=_count)
    p.add_argument("--spacing", choices=["linear", "log"])
    p.add_argument("--tol-rel", dest="tol_rel", type=_positive)
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--jobs", type=_count, help="worker processes (default: available CPUs)")
    p.add_argument("--config", help="key = value file; flags take precedence")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-check", help="compare against the brute-force Rayleigh sum")
    p.add_argument("--kind", choices=kinds, default="rect2d")
    p.add_argument("--aspect", type=_positive, default=1.0)
    p.add_argument("--ka", type=_positive, default=1.0)
    p.add_argument("--mesh-n", dest="mesh_n", type=int, default=64)
    p.add_argument("--max-rel", dest="max_rel", type=_positive, default=0.02)
    p.add_argument("--piston", action="store_true", help="uniform piston self-test on a disk mesh")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("compare-profile", help="ARE of a sampled velocity grid against the model")
    p.add_argument("--grid", required=True)
    p.add_argument("--kind", choices=kinds, default="rect2d")
    p.add_argument("--aspect", type=_positive, default=1.0)
    p.add_argument("--half-width", dest="half_width", type=_positive,
                   help="a (or the radius); default: the grid's x extent")
    p.add_argument("--mirror", action="store_true", help="complete a quarter grid by even reflection")
    p.set_defaults(func=cmd_compare_profile)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"radimp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PreconditionError, MeshTooLarge, GridError, FileNotFoundError) as exc:
        print(f"radimp: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
