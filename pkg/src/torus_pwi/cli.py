"""Command-line front end (``torus-pwi``).

Exit codes: 0 on success, 2 on configuration errors, 3 when a numerical
diagnostic fails (unsaturated closure, empty search).  Errors are also
written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import dynamics, gallery, measure, render, rotation
from .isometry import DEFAULT_CAP, GeneratorSet, TorusIsometry, semigroup_closure, symmetrize
from .partition import Interval, PartitionError, Polygon
from .system import PwiSystem

logger = logging.getLogger("torus_pwi")

SEED_ENV = "TORUS_PWI_SEED"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(Exception):
    pass


class NumericFailure(Exception):
    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload or {}


# ----------------------------------------------------------------- helpers

def _seed(args) -> int:
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    return args.seed


def load_system(args):
    """System from --system (gallery name) or --system-file (JSON descriptor)."""
    if getattr(args, "system_file", None):
        try:
            data = json.loads(Path(args.system_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read descriptor: {exc}") from exc
        return system_from_descriptor(data)
    if not getattr(args, "system", None):
        raise ConfigError("a --system name or --system-file is required")
    try:
        return gallery.build(args.system)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc


def system_from_descriptor(data: dict):
    if "gallery" in data:
        return gallery.build(data["gallery"])
    if "rotation" in data:
        r = data["rotation"]
        spec = rotation.PlaneIsometrySpec(int(r.get("j", 1)), gallery.parse_angle(r.get("phi", 0.0)),
                                          tuple(float(c) for c in r.get("b", (0.0, 0.0))))
        return rotation.build_rotation_system(spec, data.get("name"))
    return PwiSystem.from_json(data)


def _point(text: str, exact: bool):
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if exact:
        return [Fraction(p.strip()) for p in parts]
    return [float(Fraction(p.strip())) for p in parts]


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text)


def _json(obj) -> str:
    def default(o):
        if isinstance(o, Fraction):
            return str(o)
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"not serialisable: {type(o).__name__}")
    return json.dumps(obj, indent=2, default=default)


def _region(text: str, dim: int):
    vals = [Fraction(p) for p in text.split(",")]
    if dim == 1:
        if len(vals) != 2:
            raise ConfigError("a 1-d region is given as lo,hi")
        return Interval(vals[0], vals[1])
    if len(vals) != 4:
        raise ConfigError("a 2-d region is given as x0,y0,x1,y1 (a box)")
    x0, y0, x1, y1 = vals
    return Polygon(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))


def _rotation_spec(args):
    if args.system:
        s = load_system(args)
        if not isinstance(s, rotation.RotationSystem):
            raise ConfigError(f"{args.system} is not a plane rotation system")
        return s.spec
    b = tuple(args.b) if args.b else (0.0, 0.0)
    return rotation.PlaneIsometrySpec(args.j, gallery.parse_angle(args.phi), b)


# --------------------------------------------------------------- commands

def cmd_gallery_list(args):
    rows = [{"name": e.name, "description": e.description,
             "params": {k: str(v) for k, v in e.defaults.items()}} for e in gallery._ENTRIES]
    if args.json:
        _write(args.out, _json(rows))
    else:
        _write(args.out, "\n".join(f"{r['name']:<20} {r['description']}" for r in rows))


def cmd_simulate(args):
    s = load_system(args)
    exact = s.exact and not args.numeric
    x0 = _point(args.x0, exact) if args.x0 else [0.5] * s.dim
    if len(x0) != s.dim:
        raise ConfigError(f"x0 has {len(x0)} coordinates, system dimension is {s.dim}")
    rec = dynamics.orbit(s, x0, args.steps, args.period_tol)
    summary = {"system": s.name, "x0": [str(c) for c in rec.points[0].coords], "steps": args.steps,
               "status": rec.status, "preperiod": rec.preperiod, "period": rec.period,
               "final": [str(c) for c in rec.points[-1].coords]}
    if args.csv:
        header = ["k"] + [f"x{i + 1}" for i in range(s.dim)] + ["region"]
        render.write_csv(rec.to_rows(), header, args.csv)
    _write(args.out, _json(summary))


def cmd_semigroup(args):
    if args.gens:
        try:
            data = json.loads(Path(args.gens).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read generators: {exc}") from exc
        items = data["generators"] if isinstance(data, dict) else data
        gens = GeneratorSet(tuple(TorusIsometry.from_json(g) for g in items))
    else:
        s = load_system(args)
        if not s.exact:
            raise ConfigError("closure needs an exact system")
        gens = s.generators()
    if args.symmetrize:
        gens = symmetrize(gens)
    cl = semigroup_closure(gens, args.cap)
    out = {"generators": len(gens.generators), "symmetrized": gens.symmetrized,
           "size": cl.size, "saturated": cl.saturated, "cap": args.cap}
    if args.list and cl.saturated:
        out["elements"] = [g.to_json() for g in cl.elements]
    _write(args.out, _json(out))
    if not cl.saturated:
        raise NumericFailure(f"closure exceeded cap {args.cap}", out)


def cmd_measure(args):
    s = load_system(args)
    try:
        an = measure.analyze(s, args.cap)
    except measure.NotWeaklyPeriodic as exc:
        raise NumericFailure(str(exc), {"closure_size": exc.closure.size if exc.closure else None})
    out = {"system": s.name, **an.to_json(), "selected": an.selected()}
    _write(args.out, _json(out))


def cmd_approximate(args):
    s = load_system(args)
    rep = measure.approximation_pipeline(s, args.q, cap=args.cap)
    _write(args.out, rep.to_json())
    if args.csv:
        Path(args.csv).write_text(rep.to_csv())
    if not any(e.ok for e in rep):
        raise NumericFailure("no q produced a certified rationalisation")


def cmd_focusing(args):
    s = load_system(args)
    res = tuple(args.resolution) if len(args.resolution) > 1 else args.resolution[0]
    if isinstance(res, int) and s.dim > 1:
        res = (res,) * s.dim
    fe = dynamics.focusing_estimate(s, res, args.burn_in, args.horizon)
    out = {"system": s.name, "resolution": list(fe.resolution), "burn_in": fe.burn_in,
           "horizon": fe.horizon, "estimated_measure": fe.estimated_measure,
           "persistent_cells": int(len(fe.persistent_cells))}
    if s.dim == 1:
        out["intervals"] = [[float(a), float(b)] for a, b in fe.intervals()]
    _write(args.out, _json(out))


def cmd_kac(args):
    s = load_system(args)
    A = _region(args.region, s.dim)
    mu = args.mu if args.mu is not None else float(A.measure)
    prof = dynamics.return_time_profile(s, A, mu, args.samples, args.horizon, _seed(args))
    out = {"system": s.name, "mu_A": mu, "bound": prof.bound, "fraction_within": prof.fraction_within,
           "not_returned": prof.not_returned, "flagged": prof.flagged, "samples": prof.samples}
    if args.csv:
        render.write_csv(prof.histogram.items(), ["tau", "count"], args.csv)
    else:
        out["histogram"] = {str(k): v for k, v in prof.histogram.items()}
    _write(args.out, _json(out))


def cmd_hunt(args):
    spec = _rotation_spec(args)
    res = rotation.hunt_periodic(spec, args.nmax, args.seeds, args.tol, args.return_tol, _seed(args))
    sysr = rotation.build_rotation_system(spec)
    cands = []
    for c in res.candidates:
        d = rotation.clearance_and_disks(sysr, c)
        cands.append({**c.to_json(), "disk_check": {"radius": d.radius, "skipped": d.skipped,
                                                    "max_error": d.max_error, "passed": d.passed}})
    out = {"spec": spec.to_json(), "candidates": cands,
           "seed_success": res.seed_success(), "seeds": len(res.seed_periods)}
    _write(args.out, _json(out))
    if not cands:
        raise NumericFailure("no periodic orbit found")


def cmd_render(args):
    s = load_system(args)
    out = args.out
    if out and out.endswith(".ppm"):
        res = tuple(args.resolution) if args.resolution else ((256,) * s.dim)
        gm = dynamics.push_forward(s, dynamics.GridMeasure.uniform(res), args.steps)
        render.grid_to_ppm(gm, out)
        return
    if isinstance(s, rotation.RotationSystem) and args.orbits:
        hunt = rotation.hunt_periodic(s.spec, args.nmax, args.seeds, 1e-9, 0.05, _seed(args))
        cands = [c for c in hunt.candidates if (c.clearance or 0) > 0][:args.orbits]
        fig = render.circles_figure(s, cands, title=s.name or "")
    else:
        pts = None
        if args.steps and s.dim == 2:
            rng = np.random.default_rng(_seed(args))
            x = rng.random((args.points, 2))
            pts = dynamics.iterate_many(s, x, args.steps)
        fig = render.partition_figure(s, points=pts)
    text = fig.to_string()
    _write(out, text)


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="torus-pwi", description="Torus piecewise isometry laboratory")
    p.add_argument("--seed", type=int, default=0, help=f"RNG seed (overridden by ${SEED_ENV})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def system_args(sp):
        sp.add_argument("--system", help="gallery name, e.g. ex-itm-focusing:N=4,eps=0.01")
        sp.add_argument("--system-file", help="JSON system descriptor")
        sp.add_argument("--out", default="-", help="output file (default stdout)")

    sp = sub.add_parser("gallery-list", help="list built-in systems")
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_gallery_list)

    sp = sub.add_parser("simulate", help="orbit with periodicity detection")
    system_args(sp)
    sp.add_argument("--x0", help="start point, comma separated (fractions allowed)")
    sp.add_argument("--steps", type=int, default=100)
    sp.add_argument("--period-tol", type=float, default=1e-9)
    sp.add_argument("--numeric", action="store_true", help="force floating point")
    sp.add_argument("--csv", help="write the orbit as CSV")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("semigroup", help="closure size of the local isometries")
    system_args(sp)
    sp.add_argument("--gens", help="JSON list of isometries")
    sp.add_argument("--cap", type=int, default=DEFAULT_CAP)
    sp.add_argument("--symmetrize", action="store_true")
    sp.add_argument("--list", action="store_true", help="include the elements")
    sp.set_defaults(func=cmd_semigroup)

    sp = sub.add_parser("measure", help="exact invariant measures of a weakly periodic system")
    system_args(sp)
    sp.add_argument("--cap", type=int, default=DEFAULT_CAP)
    sp.set_defaults(func=cmd_measure)

    sp = sub.add_parser("approximate", help="rational approximation pipeline")
    system_args(sp)
    sp.add_argument("--q", type=int, nargs="+", default=[10, 100, 1000])
    sp.add_argument("--cap", type=int, default=DEFAULT_CAP)
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_approximate)

    sp = sub.add_parser("focusing", help="focusing-set estimate")
    system_args(sp)
    sp.add_argument("--resolution", type=int, nargs="+", default=[10_000])
    sp.add_argument("--horizon", type=int, default=200)
    sp.add_argument("--burn-in", type=int, default=None)
    sp.set_defaults(func=cmd_focusing)

    sp = sub.add_parser("kac", help="first-return statistics")
    system_args(sp)
    sp.add_argument("--region", required=True, help="lo,hi (d=1) or x0,y0,x1,y1 (d=2)")
    sp.add_argument("--mu", type=float, default=None, help="measure of A (default: Lebesgue)")
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--horizon", type=int, default=1000)
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_kac)

    sp = sub.add_parser("hunt", help="periodic orbits of a plane rotation mod 1")
    system_args(sp)
    sp.add_argument("--phi", default="pi/e")
    sp.add_argument("--b", type=float, nargs=2)
    sp.add_argument("--j", type=int, default=1, choices=(1, -1))
    sp.add_argument("--nmax", type=int, default=60)
    sp.add_argument("--seeds", type=int, default=300)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--return-tol", type=float, default=0.05)
    sp.set_defaults(func=cmd_hunt)

    sp = sub.add_parser("render", help="SVG figure or PPM heatmap")
    system_args(sp)
    sp.add_argument("--orbits", type=int, default=0, help="periodic orbits with circles (rotations)")
    sp.add_argument("--nmax", type=int, default=60)
    sp.add_argument("--seeds", type=int, default=300)
    sp.add_argument("--steps", type=int, default=0, help="push-forward / trajectory steps")
    sp.add_argument("--points", type=int, default=2000)
    sp.add_argument("--resolution", type=int, nargs="+")
    sp.set_defaults(func=cmd_render)
    return p


def _fail(code: int, kind: str, message: str, extra=None) -> int:
    payload = {"error": kind, "message": message, "exit_code": code}
    if extra:
        payload["details"] = extra
    sys.stderr.write(_json(payload) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _fail(EXIT_CONFIG, "usage", "invalid command line")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except NumericFailure as exc:
        return _fail(EXIT_NUMERIC, "numerical-failure", str(exc), exc.payload)
    except (ConfigError, PartitionError, KeyError, ValueError, TypeError, NotImplementedError) as exc:
        return _fail(EXIT_CONFIG, "configuration", str(exc))
    except ArithmeticError as exc:
        return _fail(EXIT_NUMERIC, "numerical-failure", str(exc))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
