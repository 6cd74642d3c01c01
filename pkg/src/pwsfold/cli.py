"""Command-line front end.

Commands: classify, folded, fit, show, manifold, simulate, examples. System
definitions are JSON files (expression fields or a normal_form block);
reports are JSON on stdout, bulk numeric output is CSV. Exit codes:
0 success, 2 input error, 3 numerical failure. PWSFOLD_THREADS caps the
parallelism of batch simulate runs.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys as _sys
from dataclasses import dataclass

from . import sim
from .exceptions import IntegrationError, PwsfoldError, ValidationError
from .pws import PiecewiseSystem, PwsOptions, integrate_pws
from .regularize import (builtin_sigmoid, critical_manifold,
                         critical_manifold_csv, nonhyperbolic_curve,
                         nonhyperbolic_curve_csv, SIGMOID_NAMES)
from .twofold import (TwoFoldParams, build_normal_form, classify_twofold,
                      canonical_coefficients, canonical_fit, folded_points,
                      folded_reports)


@dataclass
class SystemFile:
    """Parsed system definition: expression fields, or a normal form."""

    system: PiecewiseSystem
    normal_form: TwoFoldParams | None


def _fail(path: str, message: str) -> ValidationError:
    return ValidationError(f"{path}: {message}")


def load_system_file(path: str) -> SystemFile:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise _fail(path, "top level must be an object")

    nf = doc.get("normal_form")
    if nf is not None:
        if not isinstance(nf, dict):
            raise _fail(path, "normal_form: must be an object")
        vals = {}
        for key in ("a1", "a2", "b1", "b2"):
            if key not in nf:
                raise _fail(path, f"normal_form.{key}: missing")
            if not isinstance(nf[key], (int, float)) or isinstance(nf[key], bool):
                raise _fail(path, f"normal_form.{key}: must be a number")
            vals[key] = nf[key]
        alpha = nf.get("alpha", 0.0)
        if not isinstance(alpha, (int, float)) or isinstance(alpha, bool):
            raise _fail(path, "normal_form.alpha: must be a number")
        if vals["a1"] not in (-1, 1) or vals["a2"] not in (-1, 1):
            raise _fail(path, "normal_form.a1/a2: must be +1 or -1")
        params = TwoFoldParams(int(vals["a1"]), int(vals["a2"]),
                               float(vals["b1"]), float(vals["b2"]), float(alpha))
        return SystemFile(build_normal_form(params), params)

    def expressions(key, required):
        arr = doc.get(key)
        if arr is None:
            if required:
                raise _fail(path, f"{key}: missing")
            return None
        if not isinstance(arr, list) or len(arr) != 3:
            raise _fail(path, f"{key}: must be an array of 3 expression strings")
        for i, s in enumerate(arr):
            if not isinstance(s, str):
                raise _fail(path, f"{key}[{i}]: must be a string")
        return arr

    fplus = expressions("fplus", required=True)
    fminus = expressions("fminus", required=True)
    hidden = expressions("hidden", required=False)
    try:
        system = PiecewiseSystem.from_strings(fplus, fminus, hidden)
    except PwsfoldError as exc:
        raise _fail(path, str(exc)) from exc
    return SystemFile(system, None)


def _parse_grid(spec: str, flag: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValidationError(f"{flag}: expected LO:HI:COUNT, got {spec!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ValidationError(f"{flag}: {exc}") from exc
    if n < 1:
        raise ValidationError(f"{flag}: COUNT must be at least 1")
    if n == 1:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _parse_x0(spec: str) -> tuple[float, float, float]:
    parts = spec.split(",")
    if len(parts) != 3:
        raise ValidationError(f"--x0: expected three comma-separated reals, got {spec!r}")
    try:
        return tuple(float(v) for v in parts)  # type: ignore[return-value]
    except ValueError as exc:
        raise ValidationError(f"--x0: {exc}") from exc


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        _sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# --- commands ----------------------------------------------------------------


def _require_normal_form(sf: SystemFile, path: str) -> TwoFoldParams:
    if sf.normal_form is None:
        raise ValidationError(f"{path}: normal_form: missing (required by this command)")
    return sf.normal_form


def cmd_classify(args) -> int:
    sf = load_system_file(args.file)
    params = _require_normal_form(sf, args.file)
    s = builtin_sigmoid(args.sigmoid)
    tc = classify_twofold(params)
    report = {
        "flavour": tc.flavour.value,
        "determinacy_breaking": tc.determinacy_breaking,
        "folded_points": [r.to_json_dict() for r in folded_reports(params, s)]
        if params.alpha != 0.0 else [],
    }
    _write_text(args.out, json.dumps(report, indent=2) + "\n")
    return 0


def cmd_folded(args) -> int:
    sf = load_system_file(args.file)
    params = _require_normal_form(sf, args.file)
    s = builtin_sigmoid(args.sigmoid)
    report = [r.to_json_dict() for r in folded_reports(params, s)]
    _write_text(args.out, json.dumps(report, indent=2) + "\n")
    return 0


def cmd_fit(args) -> int:
    sf = load_system_file(args.file)
    params = _require_normal_form(sf, args.file)
    s = builtin_sigmoid(args.sigmoid)
    rows = []
    for phi_s in folded_points(params):
        p_c, q_c, r_c = canonical_coefficients(params, s, phi_s)
        p_f, q_f, r_f = canonical_fit(params, s, phi_s)
        rows.append({
            "phi_s": phi_s,
            "closed_form": {"p": p_c, "q": q_c, "r": r_c},
            "fit": {"p": p_f, "q": q_f, "r": r_f},
            "relative_difference": {
                "p": abs(p_f - p_c) / max(abs(p_c), 1e-300),
                "q": abs(q_f - q_c) / max(abs(q_c), 1e-300),
                "r": abs(r_f - r_c) / max(abs(r_c), 1e-300),
            },
        })
    _write_text(args.out, json.dumps(rows, indent=2) + "\n")
    return 0


def cmd_show(args) -> int:
    from .expr import to_text
    sf = load_system_file(args.file)
    lines = []
    if sf.normal_form is not None:
        nf = sf.normal_form
        lines.append(f"normal_form: a1={nf.a1} a2={nf.a2} b1={nf.b1!r} "
                     f"b2={nf.b2!r} alpha={nf.alpha!r}")
    for name, comps in (("fplus", sf.system.fplus),
                        ("fminus", sf.system.fminus),
                        ("hidden", sf.system.hidden)):
        for i, comp in enumerate(comps):
            lines.append(f"{name}[{i}] = {to_text(comp)}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_manifold(args) -> int:
    sf = load_system_file(args.file)
    x2_grid = _parse_grid(args.x2, "--x2")
    x3_grid = _parse_grid(args.x3, "--x3")
    points = critical_manifold(sf.system, x2_grid, x3_grid)
    _write_text(args.out, critical_manifold_csv(points))
    if sf.normal_form is not None:
        samples = nonhyperbolic_curve(sf.normal_form, args.lcurve_samples)
        if args.lcurve_out is not None:
            _write_text(args.lcurve_out, nonhyperbolic_curve_csv(samples))
        elif args.out is not None and args.out != "-":
            _write_text(args.out + ".lcurve.csv", nonhyperbolic_curve_csv(samples))
    return 0


def _simulate_one(sf: SystemFile, args, x0) -> tuple:
    if args.mode == "regularized":
        if args.eps is None:
            raise ValidationError("--eps: required in regularized mode")
        if args.eps <= 0:
            raise ValidationError("--eps: must be positive")
        opts = sim.IntegratorOptions(dense_output_stride=args.stride,
                                     layer_eps=args.eps)
        traj = sim.regularized_trajectory(sf.system, builtin_sigmoid(args.sigmoid),
                                          args.eps, x0, args.t_end, opts)
    else:
        opts = PwsOptions(dense_output_stride=args.stride)
        traj = integrate_pws(sf.system, x0, args.t_end, opts)
    return traj


def cmd_simulate(args) -> int:
    sf = load_system_file(args.file)
    if args.t_end <= 0:
        raise ValidationError("--t-end: must be positive")
    x0s = [_parse_x0(s) for s in args.x0] or [(0.1, 0.1, 0.1)]
    if len(x0s) > 1 and (args.out is None or args.out == "-"):
        raise ValidationError("--out: required when several --x0 are given")

    def run(x0):
        return _simulate_one(sf, args, x0)

    if len(x0s) == 1:
        trajs = [run(x0s[0])]
    else:
        workers = int(os.environ.get("PWSFOLD_THREADS", "0")) or min(len(x0s), os.cpu_count() or 1)
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            trajs = list(pool.map(run, x0s))

    for i, traj in enumerate(trajs):
        if len(trajs) == 1:
            out = args.out
        else:
            root, ext = os.path.splitext(args.out)
            out = f"{root}.{i}{ext or '.csv'}"
        _write_text(out, sim.trajectory_csv(traj))
        summary = (f"events={traj.events} final=({traj.final_state[0]:.6g},"
                   f"{traj.final_state[1]:.6g},{traj.final_state[2]:.6g}) "
                   f"non_unique={str(traj.non_unique).lower()}")
        stream = _sys.stderr if out in (None, "-") else _sys.stdout
        stream.write(summary + "\n")
    return 0


def cmd_examples(args) -> int:
    args.file = bundled_example_path(args.which)
    if not args.x0:
        args.x0 = [",".join(repr(v) for v in sim.DEFAULT_EXAMPLE_X0[args.which])]
    return cmd_simulate(args)


def bundled_example_path(which: str) -> str:
    base = os.path.join(os.path.dirname(__file__), "systems")
    path = os.path.join(base, f"example_{which}.json")
    if not os.path.exists(path):
        raise ValidationError(f"unknown example {which!r}; choose from i, ii, iii")
    return path


# --- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pwsfold",
        description="Two-fold singularities of piecewise-smooth systems: "
                    "classification, folded points, regularization, simulation.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_sigmoid(p):
        p.add_argument("--sigmoid", choices=SIGMOID_NAMES, default="tanh")

    p = sub.add_parser("classify", help="two-fold class and folded-point report")
    p.add_argument("file")
    add_sigmoid(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("folded", help="folded-point report only")
    p.add_argument("file")
    add_sigmoid(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_folded)

    p = sub.add_parser("fit", help="closed-form vs fitted canonical coefficients")
    p.add_argument("file")
    add_sigmoid(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("show", help="print the parsed system in canonical form")
    p.add_argument("file")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_show)

    p = sub.add_parser("manifold", help="critical-manifold CSV sampler")
    p.add_argument("file")
    p.add_argument("--x2", required=True, metavar="LO:HI:COUNT")
    p.add_argument("--x3", required=True, metavar="LO:HI:COUNT")
    p.add_argument("--out", default=None)
    p.add_argument("--lcurve-out", default=None)
    p.add_argument("--lcurve-samples", type=int, default=101)
    p.set_defaults(func=cmd_manifold)

    def add_sim_flags(p):
        p.add_argument("--mode", choices=("pws", "regularized"), default="regularized")
        p.add_argument("--eps", type=float, default=None)
        add_sigmoid(p)
        p.add_argument("--t-end", type=float, default=10.0, dest="t_end")
        p.add_argument("--x0", action="append", default=[],
                       help="comma-separated initial state; repeatable")
        p.add_argument("--stride", type=float, default=0.01)
        p.add_argument("--out", default=None)

    p = sub.add_parser("simulate", help="integrate a system file to CSV")
    p.add_argument("file")
    add_sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("examples", help="integrate a bundled attractor example")
    p.add_argument("which")
    add_sim_flags(p)
    p.set_defaults(func=cmd_examples)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        _sys.stderr.write(f"error: {exc}\n")
        return 2
    except PwsfoldError as exc:
        if isinstance(exc, IntegrationError):
            _sys.stderr.write(f"integration failed: {exc}\n")
            return 3
        _sys.stderr.write(f"error: {exc}\n")
        return 2
    except ArithmeticError as exc:
        # compiled expression fields raise raw arithmetic errors
        _sys.stderr.write(f"numerical failure: {exc!r}\n")
        return 3
    except ValueError as exc:
        _sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
