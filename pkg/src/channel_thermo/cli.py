"""Command-line front end.

Single-channel commands print JSON; ``sweep`` writes a CSV grid. Failures
go to stderr as ``{"error": <code>, "message": ...}`` with exit status 2
for invalid input and 1 for numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import __version__
from .capacity import capacity, muroga_capacity
from .core import make_distribution, validate_channel
from .errors import ChannelThermoError, InvalidParams, NotApplicable, SingularChannel, ValidationError
from .landscape import (
    FAMILIES,
    ChannelFamily,
    LandscapeGrid,
    corner_basin_diagnostics,
    diagonal_argmin_check,
    near_argmin_psi_check,
    sweep,
)
from .mixing import spectral_gap
from .thermo import DEFAULT_SUPPORT_EPS, dmc_thermo, effective_state
from .verify import SUITES, verify

LN2 = math.log(2)


def _encode(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "null"
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return format(x, ".17g")
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def dumps(obj) -> str:
    return _encode(obj) + "\n"


def _read_matrix(path, key):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidParams(f"cannot read {path}: {exc.strerror}") from exc
    if path.endswith(".json") or text.lstrip().startswith(("{", "[")):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidParams(f"{path}: {exc}") from exc
        if isinstance(data, dict):
            if key not in data:
                raise InvalidParams(f"{path}: missing key {key!r}")
            data = data[key]
        return data
    rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
    try:
        return [[float(c) for c in r] for r in rows]
    except ValueError as exc:
        raise InvalidParams(f"{path}: {exc}") from exc


def load_channel(path):
    """Channel from ``{"W": [[...], ...]}`` JSON or one-row-per-line CSV."""
    try:
        return validate_channel(_read_matrix(path, "W"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise InvalidParams(f"{path}: {exc}") from exc


def load_distribution(path):
    data = _read_matrix(path, "p")
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    return make_distribution(arr)


def load_params(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InvalidParams(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidParams(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidParams(f"{path}: parameters must be a JSON object")
    return data


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_capacity(args):
    W = load_channel(args.channel)
    r = capacity(W, args.method, tol=args.tol)
    d_positive = r.d_positive
    if r.method != "muroga":
        try:
            muroga_capacity(W)
            d_positive = True
        except (SingularChannel, NotApplicable):
            d_positive = False
    out = {
        "C": r.C / LN2 if args.bits else r.C,
        "units": "bits" if args.bits else "nats",
        "p_star": r.p_star.weights,
        "method": r.method,
        "iterations": r.iterations,
        "d_positive": d_positive,
    }
    _emit(dumps(out), args.out)


def cmd_mixing(args):
    r = spectral_gap(load_channel(args.channel))
    _emit(dumps(r.to_dict()), args.out)


def cmd_thermo(args):
    r = dmc_thermo(load_channel(args.channel), ba_tol=args.tol, support_eps=args.support_eps)
    out = r.to_dict()
    if args.bits:
        out["C"] /= LN2
        out["H"] /= LN2
    out["units"] = "bits" if args.bits else "nats"
    _emit(dumps(out), args.out)


def cmd_thermo_state(args):
    s = effective_state(load_distribution(args.p), args.t_inf)
    _emit(dumps(s.to_dict()), args.out)


def cmd_sweep(args):
    fam = ChannelFamily(args.family, load_params(args.params))
    grid = sweep(
        fam,
        args.nu,
        args.nv,
        args.margin,
        workers=args.workers,
        ba_tol=args.tol,
        support_eps=args.support_eps,
    )
    text = grid.to_csv()
    _emit(text, args.out)
    failed = int((~grid.ok).sum())
    if args.out:
        summary = {"cells": grid.C.size, "failed": failed, "degenerate": int(grid.degenerate.sum())}
        sys.stdout.write(dumps(summary))


def cmd_report(args):
    grid = LandscapeGrid.from_csv(args.grid)
    if args.check == "eq2":
        out = diagonal_argmin_check(grid, args.tie_tol)
    elif args.check == "corners":
        out = corner_basin_diagnostics(grid, args.support_eps, args.band_width)
    else:
        if args.family is None:
            raise InvalidParams("--check psi needs --family")
        fam = ChannelFamily(args.family, load_params(args.params))
        out = near_argmin_psi_check(grid, fam, radius=args.radius, ratio=args.ratio)
    out = {"check": args.check, **out}
    _emit(dumps(out), args.out)


def cmd_verify(args):
    report = verify(args.suite, args.seed, resolution=args.resolution, workers=args.workers)
    _emit(dumps(report), args.out)
    if not report["passed"]:
        return 1
    return 0


def _positive(kind):
    def parse(text):
        try:
            x = kind(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
        if not x > 0:
            raise argparse.ArgumentTypeError(f"{text} must be positive")
        return x

    return parse


def _unit_interval(text):
    x = float(text)
    if not 0 <= x < 0.5:
        raise argparse.ArgumentTypeError("margin must lie in [0, 0.5)")
    return x


def build_parser():
    ap = argparse.ArgumentParser(prog="channel-thermo", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def with_out(p):
        p.add_argument("--out", help="write to this file instead of stdout")
        return p

    p = with_out(sub.add_parser("capacity", help="channel capacity"))
    p.add_argument("--channel", required=True)
    p.add_argument("--method", choices=["ba", "muroga", "auto"], default="auto")
    p.add_argument("--tol", type=_positive(float), default=1e-10)
    p.add_argument("--bits", action="store_true", help="report capacity in bits")
    p.set_defaults(func=cmd_capacity)

    p = with_out(sub.add_parser("mixing", help="spectral gap and L2 mixing time"))
    p.add_argument("--channel", required=True)
    p.set_defaults(func=cmd_mixing)

    p = with_out(sub.add_parser("thermo", help="effective thermodynamics of a channel"))
    p.add_argument("--channel", required=True)
    p.add_argument("--support-eps", type=_positive(float), default=DEFAULT_SUPPORT_EPS)
    p.add_argument("--tol", type=_positive(float), default=1e-10)
    p.add_argument("--bits", action="store_true")
    p.set_defaults(func=cmd_thermo)

    p = with_out(sub.add_parser("thermo-state", help="effective state of a distribution"))
    p.add_argument("--p", required=True, help='JSON {"p": [...]} or CSV row')
    p.add_argument("--t-inf", type=_positive(float), required=True)
    p.set_defaults(func=cmd_thermo_state)

    p = with_out(sub.add_parser("sweep", help="grid sweep of a channel family (CSV)"))
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--params", help="JSON file overriding family parameters")
    p.add_argument("--nu", type=int, default=101)
    p.add_argument("--nv", type=int, default=101)
    p.add_argument("--margin", type=_unit_interval, default=0.02)
    p.add_argument("--workers", type=_positive(int), default=None)
    p.add_argument("--support-eps", type=_positive(float), default=DEFAULT_SUPPORT_EPS)
    p.add_argument("--tol", type=_positive(float), default=1e-10)
    p.set_defaults(func=cmd_sweep)

    p = with_out(sub.add_parser("report", help="diagnostics of a sweep grid"))
    p.add_argument("--grid", required=True)
    p.add_argument("--check", choices=["eq2", "corners", "psi"], required=True)
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--params")
    p.add_argument("--support-eps", type=_positive(float), default=DEFAULT_SUPPORT_EPS)
    p.add_argument("--band-width", type=_positive(float), default=0.05)
    p.add_argument("--tie-tol", type=_positive(float), default=1e-9)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--ratio", type=_positive(float), default=0.1)
    p.set_defaults(func=cmd_report)

    p = with_out(sub.add_parser("verify", help="run property suites"))
    p.add_argument("--suite", default="all", help=f"one of {', '.join(SUITES)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=int, default=101, help="grid size for sweep-based checks")
    p.add_argument("--workers", type=_positive(int), default=None)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep" and (args.nu < 2 or args.nv < 2):
            raise InvalidParams("--nu and --nv must be at least 2")
        status = args.func(args)
    except ChannelThermoError as exc:
        sys.stderr.write(dumps({"error": exc.code, "message": str(exc)}))
        return exc.exit_status
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
