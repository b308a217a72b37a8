"""Command-line entry point: ``hcmu <subcommand> [options]``.

Exit codes: 0 success, 2 configuration/validation error, 3 numerical event
stop, 4 I/O or file-format error. Errors are reported as one JSON record on
standard error.
"""
from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from fractions import Fraction

from . import __version__, io, pipeline
from .config import RunConfig, from_dict, load_config
from .core import make_x_map, validate_params
from .errors import ConfigError, FormatError, HCMUError, UnsupportedModel
from .forms import classify_weingarten, codazzi_residual, gauss_residual
from .verify import Tolerances, refinement_ladder, run_report

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
OUTPUT_ENV = "HCMU_OUTPUT_DIR"


class ValidationStage(Exception):
    """Wraps errors raised while validating inputs (mapped to exit code 2)."""

    def __init__(self, err):
        super().__init__(str(err))
        self.err = err


def _override_keys():
    return ("k1", "k2", "c", "A", "s", "K0", "H0", "branch", "seed", "on_event", "pairing")


def build_config(args) -> RunConfig:
    data = load_config(args.config).to_dict() if getattr(args, "config", None) else {}
    for key in _override_keys():
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    for name in ("x_grid", "y_grid"):
        val = getattr(args, name, None)
        if val is not None:
            lo, hi, n = val
            data[name] = {"min": float(lo), "max": float(hi), "n": int(n)}
    if "k1" not in data or "k2" not in data:
        raise ConfigError("k1 and k2 are required (flags or config file)")
    return from_dict(data)


def validate(cfg: RunConfig):
    """Parameter and initial-state checks; any failure maps to exit code 2."""
    try:
        return pipeline.solve(cfg, K_grid=[])
    except HCMUError as exc:
        raise ValidationStage(exc) from None


def _out_dir(args):
    d = args.out or os.environ.get(OUTPUT_ENV) or "."
    os.makedirs(d, exist_ok=True)
    return d


def _path(args, cfg, key, default):
    given = getattr(cfg.outputs, key)
    return given if given else os.path.join(_out_dir(args), default)


def cmd_params(args):
    cfg = build_config(args)
    try:
        P = validate_params(cfg.k1, cfg.k2)
    except HCMUError as exc:
        raise ValidationStage(exc) from None
    out = {"k1": P.k1, "k2": P.k2, "kind": P.kind.value, "delta": P.delta,
           "delta_fraction": str(Fraction(P.delta).limit_denominator(10 ** 6))}
    exps = P.exponents()
    if exps is not None:
        out.update(zip(("sigma", "beta", "gamma"), exps))
    m = make_x_map(P)
    out["x_range"] = list(m.x_range)
    for k in ("sigma", "beta", "gamma", "delta"):
        if k in out:
            print(f"{k} = {out[k]!r}")
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def cmd_solve_h(args):
    cfg = build_config(args)
    validate(cfg)
    run = pipeline.solve(cfg)
    path = _path(args, cfg, "csv", "h_table.csv")
    io.write_h_table(path, run.solution, cfg.hash())
    print(path)
    if run.solution.stopped_early:
        K, kind = next((K, k) for K, k in run.solution.events if k.value != "BranchSwitch")
        print(json.dumps({"error": "SolverStopped", "event": kind.value, "K": K}),
              file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_forms(args):
    cfg = build_config(args)
    validate(cfg)
    run = pipeline.forms(cfg)
    path = _path(args, cfg, "forms", "forms.txt")
    io.write_forms(path, run.forms, cfg.hash())
    print(path)
    return EXIT_OK


def _immerse(cfg, out_dir, mesh_format, project):
    run = pipeline.immerse(cfg)
    ext = {"obj": "obj", "ply": "ply", "csv4d": "csv"}[mesh_format]
    mesh = cfg.outputs.mesh or os.path.join(out_dir, f"surface.{ext}")
    io.write_mesh(mesh, run.patch, mesh_format, project, cfg.hash())
    diag = {"patch_hash": run.patch.digest(), "shape": list(run.patch.shape),
            "ambient": run.patch.ambient.model.value,
            "diagnostics": run.patch.diagnostics}
    io.write_json(os.path.join(out_dir, "diagnostics.json"), diag, cfg.hash())
    return run, mesh


def _mesh_opts(args, cfg):
    fmt_name = args.format or cfg.outputs.mesh_format
    project = args.project or cfg.outputs.project
    if cfg.c != 0 and fmt_name in ("obj", "ply") and project != "stereographic":
        raise ValidationStage(UnsupportedModel(
            f"{fmt_name.upper()} output needs c = 0 or --project stereographic", c=cfg.c))
    return fmt_name, project


def cmd_immerse(args):
    cfg = build_config(args)
    fmt_name, project = _mesh_opts(args, cfg)
    validate(cfg)
    _, mesh = _immerse(cfg, _out_dir(args), fmt_name, project)
    print(mesh)
    return EXIT_OK


def _report(cfg, controls=True, ladder_h=None):
    run = pipeline.immerse(cfg)
    neg = pipeline.immerse(cfg, h_scale=1.01).patch if controls else None
    ladder = None
    if ladder_h:
        def build(h):
            r = pipeline.immerse(pipeline.centred(cfg, h))
            return r.patch, r.forms
        ladder = refinement_ladder(build, ladder_h)
    neg_pair = (neg, None) if neg is not None else None
    return run, run_report(run.patch, run.forms, Tolerances(), negative_control=neg_pair,
                           ladder=ladder)


def cmd_verify(args):
    cfg = build_config(args)
    validate(cfg)
    _, rep = _report(cfg, controls=not args.no_controls,
                     ladder_h=None if args.no_ladder else args.ladder_h)
    path = _path(args, cfg, "report", "report.json")
    io.write_json(path, rep.record(), cfg.hash())
    print(path)
    print(json.dumps({"passed": rep.passed, "checks": rep.checks}, sort_keys=True))
    return EXIT_OK


def cmd_classify(args):
    try:
        field, c = io.read_forms_field(args.input)
    except OSError as exc:
        raise FormatError(f"cannot read {args.input}: {exc.strerror}", line=0) from None
    verdict = classify_weingarten(field, c=c, tol_abs=args.tol_abs, tol_rel=args.tol_rel,
                                  x_only_tol=args.x_only_tol)
    print(json.dumps(asdict(verdict), sort_keys=True))
    return EXIT_OK


def _cell_name(c, A, s):
    return f"c={c!r}_A={A!r}_s={s!r}"


def _run_cell(task):
    """One sweep cell; returns a summary record (never raises)."""
    cfg_dict, out_dir, fmt_name, project = task
    cfg = from_dict(cfg_dict)
    os.makedirs(out_dir, exist_ok=True)
    rec = {"cell": os.path.basename(out_dir), "config_hash": cfg.hash()}
    try:
        validate(cfg)
        run = pipeline.forms(cfg)
        io.write_forms(os.path.join(out_dir, "forms.txt"), run.forms, cfg.hash())
        io.write_h_table(os.path.join(out_dir, "h_table.csv"), run.solution, cfg.hash())
        _immerse(cfg, out_dir, fmt_name, project)
        hopf, det = gauss_residual(run.forms)
        r1, r2 = codazzi_residual(run.forms)
        rec.update(status="ok", gauss=float(max(abs(hopf).max(), abs(det).max())),
                   codazzi=float(max(abs(r1).max(), abs(r2).max())),
                   h12=float(run.forms.h12[0]))
    except ValidationStage as exc:
        rec.update(status="config_error", error=exc.err.record())
    except HCMUError as exc:
        rec.update(status="numerical_stop", error=exc.record())
    io.write_json(os.path.join(out_dir, "cell.json"), rec, cfg.hash())
    return rec


def cmd_sweep(args):
    base = build_config(args)
    fmt_name = args.format or ("obj" if not args.c_values or args.c_values == [0.0] else "csv4d")
    project = args.project or "none"
    out = _out_dir(args)
    tasks = []
    for c, A, s in itertools.product(args.c_values or [base.c], args.A_values or [base.A],
                                     args.s_values or [base.s]):
        cfg = base.replace(c=float(c), A=float(A), s=s)
        if c != 0 and fmt_name in ("obj", "ply") and project != "stereographic":
            raise ValidationStage(UnsupportedModel("sweep over c != 0 needs csv4d or projection"))
        tasks.append((cfg.to_dict(), os.path.join(out, _cell_name(c, A, s)), fmt_name, project))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]
    io.write_json(os.path.join(out, "sweep.json"), {"cells": results}, base.hash())
    for r in results:
        print(f"{r['cell']}: {r['status']}")
    return EXIT_OK if all(r["status"] == "ok" for r in results) else EXIT_NUMERIC


def _add_common(p, grids=True):
    p.add_argument("--config", help="YAML or JSON run configuration")
    p.add_argument("--k1", type=float)
    p.add_argument("--k2", type=float)
    p.add_argument("--c", type=float, help="space-form curvature")
    p.add_argument("--A", type=float, help="Weingarten constant")
    p.add_argument("--s", type=float, help="closed-form constant for the default start")
    p.add_argument("--K0", type=float)
    p.add_argument("--H0", type=float)
    p.add_argument("--branch", choices=["plus", "minus"])
    p.add_argument("--on-event", dest="on_event", choices=["Stop", "SwitchBranch"])
    p.add_argument("--pairing", choices=["standard", "flipped", "auto"])
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")
    if grids:
        p.add_argument("--x-grid", dest="x_grid", nargs=3, metavar=("MIN", "MAX", "N"))
        p.add_argument("--y-grid", dest="y_grid", nargs=3, metavar=("MIN", "MAX", "N"))


def make_parser():
    ap = argparse.ArgumentParser(prog="hcmu", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="validate (k1, k2) and print derived constants")
    _add_common(p, grids=False)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("solve-h", help="tabulate K, H, dH/dK")
    _add_common(p)
    p.set_defaults(func=cmd_solve_h)

    p = sub.add_parser("forms", help="write the fundamental forms on the x-grid")
    _add_common(p)
    p.set_defaults(func=cmd_forms)

    for name, func, hlp in (("immerse", cmd_immerse, "integrate frames and write a mesh"),
                            ("verify", cmd_verify, "finite-difference verification report")):
        p = sub.add_parser(name, help=hlp)
        _add_common(p)
        p.add_argument("--format", choices=sorted(io.MESH_WRITERS))
        p.add_argument("--project", choices=["none", "stereographic"])
        if name == "verify":
            p.add_argument("--no-controls", action="store_true")
            p.add_argument("--no-ladder", action="store_true")
            p.add_argument("--ladder-h", type=float, default=4e-3)
        p.set_defaults(func=func)

    p = sub.add_parser("classify", help="Weingarten test on a forms file")
    p.add_argument("input")
    p.add_argument("--tol-abs", type=float, default=1e-9)
    p.add_argument("--tol-rel", type=float, default=1e-6)
    p.add_argument("--x-only-tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep", help="cartesian product over A, s and c")
    _add_common(p)
    p.add_argument("--A-values", dest="A_values", type=float, nargs="+")
    p.add_argument("--s-values", dest="s_values", type=float, nargs="+")
    p.add_argument("--c-values", dest="c_values", type=float, nargs="+")
    p.add_argument("--format", choices=sorted(io.MESH_WRITERS))
    p.add_argument("--project", choices=["none", "stereographic"])
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return ap


def _fail(code, err):
    print(json.dumps(err.record() if isinstance(err, HCMUError) else err, sort_keys=True),
          file=sys.stderr)
    return code


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationStage as exc:
        return _fail(EXIT_CONFIG, exc.err)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except FormatError as exc:
        return _fail(EXIT_IO, exc)
    except UnsupportedModel as exc:
        return _fail(EXIT_CONFIG, exc)
    except HCMUError as exc:
        return _fail(EXIT_NUMERIC, exc)
    except OSError as exc:
        return _fail(EXIT_IO, {"error": "IOError", "message": str(exc)})


if __name__ == "__main__":
    sys.exit(main())
