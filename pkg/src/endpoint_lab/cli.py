"""Command-line front end: ``endpoint-lab <command> [options]``.

Every command writes ``report.json`` plus its CSV tables into ``--out``
(default ``./endpoint_lab_out``) and nothing anywhere else.

Exit status: 0 when every check of the run passes, 1 when some check
fails (the report is still written), 2 on invalid input or configuration.

Configuration
-------------
``--config FILE`` reads a YAML or JSON mapping (a previously written
``report.json`` is accepted as well; its embedded ``config`` is used)::

    grid: {L: 6.283185307179586, M: 32768}   # optional
    params: {N: "4..11"}                       # command parameters
    out: results
    emit_plot_data: true

Precedence is flags > config file > built-in defaults, and the effective
configuration is echoed into ``report.json`` under ``config``, so that
``--config report.json`` repeats the run.

List parameters accept ``4..11`` (inclusive integer range), ``2^-5..2^-10``
(powers of two), comma separated values and ``2^k`` tokens.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from typing import Optional

import numpy as np
import yaml

from . import __version__
from . import experiments as ex
from .grid import Grid, SampledFunction
from .littlewood_paley import DEFAULT_SEED, build_partition, h1_norm
from .operator import apply, kernel_slice
from .symbols import (CSV_SCHEMA_VERSION, ClassParams, check_symbol_class, identity_symbol,
                      reference_symbol, symbol_A, symbol_B, symbol_C)

COMMANDS = ("check-symbol", "apply", "kernel", "h1-norm", "l1-blowup", "weak-type", "h1l1-atoms",
            "h1-counterexample", "lp-counterexample", "all")

# grid used when neither flags nor config give one (None: the experiment's own default)
DEFAULT_GRIDS = {
    "check-symbol": (2 * math.pi, 2 ** 15),
    "kernel": (8.0, 2 ** 10),
    "h1-norm": (2 * math.pi, 2 ** 15),
    "h1-counterexample": (2 * math.pi, 2 ** 15),
    "lp-counterexample": (7 * math.pi, 2 ** 21),
    "l1-blowup": (1.0, 2 ** 18),
    "weak-type": (2.0, 2 ** 15),
}

DEFAULTS = {
    "check-symbol": {"symbol": "B", "rho": 0.5, "p": 2.0, "m": 0.0, "class": None, "alpha": 2, "beta": 2,
                     "j_min": 2, "j_max": None, "expect_slope": 0.0, "slope_tol": 0.15},
    "apply": {"symbol": "identity", "rho": 0.5, "p": 2.0, "m": 0.0, "input": None},
    "kernel": {"symbol": "A", "rho": 0.5, "p": 2.0, "m": 0.0, "x": 0.0, "method": "fft"},
    "h1-norm": {"input": None, "N": 8},
    "l1-blowup": {"rho": 0.5, "eps": "2^-6..2^-12", "n_panels": 32},
    "weak-type": {"rho": 0.0, "eps": "2^-5..2^-10"},
    "h1l1-atoms": {"rho": 0.5, "r": "2^-5..2^3", "n_atoms": 8, "seed": DEFAULT_SEED, "method": "kernel",
                   "cells": 32},
    "h1-counterexample": {"N": "4..11"},
    "lp-counterexample": {"p": 4.0 / 3.0, "N": "9..14", "n_samples": 1000, "seed": DEFAULT_SEED},
    "all": {},
}


class ConfigError(ValueError):
    """Invalid flags, configuration file or parameters (exit status 2)."""


# ---------------------------------------------------------------------------
# parsing helpers


def _number(tok: str) -> float:
    tok = tok.strip()
    if tok.startswith("2^"):
        return 2.0 ** float(tok[2:])
    return float(tok)


def parse_list(value, integer: bool = False) -> list:
    """Parse ``4..11``, ``2^-5..2^-10``, ``1,2,4`` or a YAML list into numbers."""
    if isinstance(value, (list, tuple)):
        vals = [float(v) if not isinstance(v, str) else _number(v) for v in value]
    elif isinstance(value, (int, float)):
        vals = [float(value)]
    else:
        vals = []
        for tok in str(value).split(","):
            tok = tok.strip()
            if not tok:
                continue
            if ".." in tok:
                lo, hi = (t.strip() for t in tok.split("..", 1))
                if lo.startswith("2^") and hi.startswith("2^"):
                    a, b = int(lo[2:]), int(hi[2:])
                    step = 1 if b >= a else -1
                    vals += [2.0 ** k for k in range(a, b + step, step)]
                else:
                    a, b = int(lo), int(hi)
                    step = 1 if b >= a else -1
                    vals += [float(k) for k in range(a, b + step, step)]
            else:
                vals.append(_number(tok))
    if integer:
        if any(v != int(v) for v in vals):
            raise ConfigError(f"expected integers, got {value!r}")
        return [int(v) for v in vals]
    return vals


def _class_params(value) -> ClassParams:
    if isinstance(value, dict):
        return ClassParams(float(value["m"]), float(value["rho"]), float(value["delta"]),
                           bool(value.get("rough", False)))
    parts = [p.strip() for p in str(value).split(",")]
    if len(parts) not in (3, 4):
        raise ConfigError(f"--class expects m,rho,delta[,rough], got {value!r}")
    rough = len(parts) == 4 and parts[3].lower() in ("rough", "1", "true")
    return ClassParams(float(parts[0]), float(parts[1]), float(parts[2]), rough)


def read_signal(path: str) -> SampledFunction:
    """Read a sampled function from CSV (columns ``x, re[, im]``; ``#`` lines are comments).

    The samples must sit on ``x_k = -L + k h`` with a power-of-two count.
    """
    xs, vals = [], []
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    if not rows:
        raise ConfigError(f"{path}: no data")
    head = [c.strip().lower() for c in rows[0]]
    if head[0] == "x":
        rows = rows[1:]
    for r in rows:
        xs.append(float(r[0]))
        re_ = float(r[1]) if len(r) > 1 else 0.0
        im_ = float(r[2]) if len(r) > 2 else 0.0
        vals.append(complex(re_, im_))
    x = np.array(xs)
    M = x.size
    L = -x[0]
    try:
        grid = Grid(L, M)
    except ValueError as err:
        raise ConfigError(f"{path}: samples do not form a grid on [-L, L): {err}") from None
    if not np.allclose(x, grid.x, rtol=0, atol=1e-9 * max(1.0, L)):
        raise ConfigError(f"{path}: samples are not uniformly spaced on [-L, L) with L = {L}")
    return SampledFunction(grid, np.array(vals))


def write_signal(path: str, f: SampledFunction) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# sampled function schema v{CSV_SCHEMA_VERSION}; L={f.grid.L!r}; M={f.grid.M}\n")
        w = csv.writer(fh)
        w.writerow(["x", "re", "im"])
        for xv, v in zip(f.grid.x, f.values):
            w.writerow([repr(float(xv)), repr(float(v.real)), repr(float(v.imag))])


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    unknown = set(data) - {"command", "grid", "params", "out", "emit_plot_data"}
    if unknown:
        raise ConfigError(f"config {path}: unknown keys {sorted(unknown)}")
    return data


# ---------------------------------------------------------------------------
# argument parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON configuration file (or a previous report.json)")
    common.add_argument("--out", default=None, help="output directory (default ./endpoint_lab_out)")
    common.add_argument("--L", type=float, default=None, help="grid half-length")
    common.add_argument("--M", type=int, default=None, help="grid size (power of two)")
    common.add_argument("--emit-plot-data", action="store_true", default=None,
                        help="also write (x, y, series) plot triplets")
    common.add_argument("--quiet", action="store_true", help="no summary on stdout")

    p = argparse.ArgumentParser(prog="endpoint-lab",
                                description="Endpoint estimates for pseudo-differential operators on the line.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def symbol_opts(sp):
        sp.add_argument("--symbol", choices=["A", "B", "C", "reference", "identity"], default=None)
        sp.add_argument("--rho", type=float, default=None, help="rho for symbol A")
        sp.add_argument("--p", type=float, default=None, help="p for symbol C")
        sp.add_argument("--m", type=float, default=None, help="order of the reference symbol")

    sp = sub.add_parser("check-symbol", parents=[common], help="finite-difference symbol-class seminorms")
    symbol_opts(sp)
    sp.add_argument("--class", dest="class_", default=None, help="m,rho,delta[,rough]")
    sp.add_argument("--alpha", type=int, default=None)
    sp.add_argument("--beta", type=int, default=None)
    sp.add_argument("--j-min", type=int, default=None)
    sp.add_argument("--j-max", type=int, default=None)
    sp.add_argument("--expect-slope", type=float, default=None, help="expected slope (default 0)")
    sp.add_argument("--slope-tol", type=float, default=None, help="slope tolerance (default 0.15)")

    sp = sub.add_parser("apply", parents=[common], help="apply T_a to a sampled function")
    symbol_opts(sp)
    sp.add_argument("--input", default=None, help="CSV with columns x, re, im")

    sp = sub.add_parser("kernel", parents=[common], help="kernel slice k(x, .)")
    symbol_opts(sp)
    sp.add_argument("--x", type=float, default=None)
    sp.add_argument("--method", choices=["fft", "exact"], default=None)

    sp = sub.add_parser("h1-norm", parents=[common], help="discrete H^1 norm")
    sp.add_argument("--input", default=None, help="CSV with columns x, re, im (default: f_N)")
    sp.add_argument("--N", default=None, help="N of the lacunary test function when no input is given")

    sp = sub.add_parser("l1-blowup", parents=[common], help="L^1 blow-up for 0 < rho < 1")
    sp.add_argument("--rho", type=float, default=None)
    sp.add_argument("--eps", default=None, help="e.g. 2^-6..2^-12")
    sp.add_argument("--n-panels", type=int, default=None)

    sp = sub.add_parser("weak-type", parents=[common],
                        help="weak-(1,1) failure (rho = 0) or exploratory data (0 < rho < 1)")
    sp.add_argument("--rho", type=float, default=None)
    sp.add_argument("--eps", default=None)

    sp = sub.add_parser("h1l1-atoms", parents=[common], help="||T b||_1 over L^2-atoms")
    sp.add_argument("--rho", type=float, default=None)
    sp.add_argument("--r", default=None, help="radii, e.g. 2^-5..2^3")
    sp.add_argument("--n-atoms", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--method", choices=["kernel", "grid"], default=None)
    sp.add_argument("--cells", type=int, default=None)

    sp = sub.add_parser("h1-counterexample", parents=[common], help="S^0_{1,1} counterexample rates")
    sp.add_argument("--N", default=None, help="e.g. 4..11")

    sp = sub.add_parser("lp-counterexample", parents=[common], help="S^{-1/p}_{0,1} counterexample rates")
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--N", default=None, help="e.g. 9..14")
    sp.add_argument("--n-samples", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)

    sub.add_parser("all", parents=[common], help="every experiment with its default configuration")
    return p


_FLAG_TO_PARAM = {"class_": "class", "j_min": "j_min", "j_max": "j_max", "n_panels": "n_panels",
                  "n_atoms": "n_atoms", "n_samples": "n_samples", "expect_slope": "expect_slope",
                  "slope_tol": "slope_tol"}
_NOT_PARAMS = {"command", "config", "out", "L", "M", "emit_plot_data", "quiet"}


def effective_config(args) -> dict:
    """Merge flags, config file and defaults (in that order of precedence)."""
    cfg = _load_config(args.config) if args.config else {}
    if cfg.get("command") not in (None, args.command):
        raise ConfigError(f"config was written for command {cfg['command']!r}, not {args.command!r}")
    params = dict(DEFAULTS[args.command])
    file_params = cfg.get("params") or {}
    unknown = set(file_params) - set(params)
    if unknown:
        raise ConfigError(f"unknown parameters for {args.command}: {sorted(unknown)}")
    params.update(file_params)
    for key, val in vars(args).items():
        if key in _NOT_PARAMS or val is None:
            continue
        params[_FLAG_TO_PARAM.get(key, key)] = val
    grid = cfg.get("grid")
    if args.L is not None or args.M is not None:
        base = grid or {}
        dL, dM = DEFAULT_GRIDS.get(args.command, (None, None))
        grid = {"L": args.L if args.L is not None else base.get("L", dL),
                "M": args.M if args.M is not None else base.get("M", dM)}
    if grid is not None:
        if args.command == "all":
            raise ConfigError("the 'all' command uses each experiment's default grid; drop --L/--M")
        if grid.get("L") is None or grid.get("M") is None:
            raise ConfigError(f"{args.command}: set both L and M")
        grid = {"L": float(grid["L"]), "M": int(grid["M"])}
    out = args.out if args.out is not None else cfg.get("out", "endpoint_lab_out")
    plot = args.emit_plot_data if args.emit_plot_data is not None else bool(cfg.get("emit_plot_data", False))
    return {"command": args.command, "grid": grid, "params": params, "out": out, "emit_plot_data": plot}


def _grid(cfg: dict, command: Optional[str] = None) -> Optional[Grid]:
    g = cfg["grid"]
    if g is None:
        d = DEFAULT_GRIDS.get(command or cfg["command"])
        return None if d is None else Grid(*d)
    return Grid(g["L"], g["M"])


def _make_symbol(params: dict, grid: Optional[Grid]):
    name = params["symbol"]
    if name == "identity":
        return identity_symbol()
    if name == "reference":
        return reference_symbol(float(params["m"]))
    if grid is None:
        raise ConfigError(f"symbol {name} needs a grid")
    P = build_partition(grid)
    if name == "A":
        return symbol_A(float(params["rho"]), grid, P)
    if name == "B":
        return symbol_B(grid, P)
    if name == "C":
        return symbol_C(float(params["p"]), grid, P)
    raise ConfigError(f"unknown symbol {name!r}")


# ---------------------------------------------------------------------------
# commands; each returns a list of ExperimentReport


def _cmd_check_symbol(cfg):
    prm = cfg["params"]
    grid = _grid(cfg)
    a = _make_symbol(prm, grid)
    params = _class_params(prm["class"]) if prm["class"] is not None else a.declared
    j_max = prm["j_max"]
    if j_max is None and getattr(a, "j_max", None) is not None:
        j_max = a.j_max
    sr = check_symbol_class(a, params, int(prm["alpha"]), int(prm["beta"]), grid,
                            j_min=int(prm["j_min"]), j_max=j_max)
    os.makedirs(cfg["out"], exist_ok=True)
    sr.to_csv(os.path.join(cfg["out"], "seminorms.csv"))
    rep = ex.ExperimentReport("check_symbol", {"symbol": a.name, "class": list(params.as_tuple()),
                                               "rough": params.rough}, grid=grid.metadata())
    rep.parameters["seminorm_csv"] = "seminorms.csv"
    exp, tol = float(prm["expect_slope"]), float(prm["slope_tol"])
    for (al, be), s in sorted(sr.slopes.items()):
        rep.check(f"slope alpha={al} beta={be}", abs(s - exp) <= tol, s, f"|slope - {exp:g}| <= {tol:g}")
    return [rep]


def _cmd_apply(cfg):
    prm = cfg["params"]
    if not prm["input"]:
        raise ConfigError("apply needs --input")
    f = read_signal(prm["input"])
    if cfg["grid"] is not None and _grid(cfg) != f.grid:
        raise ConfigError("the grid of --input differs from the configured grid")
    a = _make_symbol(prm, f.grid)
    Tf = apply(a, f)
    os.makedirs(cfg["out"], exist_ok=True)
    write_signal(os.path.join(cfg["out"], "apply.csv"), Tf)
    rep = ex.ExperimentReport("apply", {"symbol": a.name, "input": prm["input"]}, grid=f.grid.metadata())
    return [rep]


def _cmd_kernel(cfg):
    prm = cfg["params"]
    grid = _grid(cfg)
    a = _make_symbol(prm, grid)
    ks = kernel_slice(a, float(prm["x"]), grid, method=prm["method"])
    os.makedirs(cfg["out"], exist_ok=True)
    ks.to_csv(os.path.join(cfg["out"], "kernel.csv"))
    meta = {k: v for k, v in ks.metadata.items() if k != "grid"}
    return [ex.ExperimentReport("kernel", {"symbol": a.name, **meta}, grid=grid.metadata())]


def _cmd_h1_norm(cfg):
    prm = cfg["params"]
    if prm["input"]:
        f = read_signal(prm["input"])
        grid = f.grid
        label = prm["input"]
    else:
        grid = _grid(cfg)
        N = int(prm["N"])
        from .grid import Spectrum, inverse_transform
        f = inverse_transform(Spectrum(grid, ex._fN_spectrum_B(grid, N)))
        label = f"f_N, N={N}"
    P = build_partition(grid)
    val = h1_norm(f, P)
    rep = ex.ExperimentReport("h1_norm", {"input": label}, grid=grid.metadata())
    rep.tables["h1_norm"] = [{"input": label, "h1_norm": val}]
    return [rep]


def _cmd_l1_blowup(cfg):
    prm = cfg["params"]
    return [ex.run_l1_blowup(float(prm["rho"]), parse_list(prm["eps"]), grid=_grid(cfg),
                             n_panels=int(prm["n_panels"]))]


def _cmd_weak_type(cfg):
    prm = cfg["params"]
    rho = float(prm["rho"])
    eps = parse_list(prm["eps"])
    if rho == 0:
        return [ex.run_weak_type_failure(eps, grid=_grid(cfg))]
    grid = None if cfg["grid"] is None else _grid(cfg)
    return [ex.run_weak_type_exploratory(rho, eps, grid=grid)]


def _cmd_h1l1(cfg):
    prm = cfg["params"]
    if cfg["grid"] is not None:
        raise ConfigError("h1l1-atoms builds one grid per radius; --L/--M do not apply")
    return [ex.run_h1_l1_boundedness(float(prm["rho"]), parse_list(prm["r"]), n_atoms=int(prm["n_atoms"]),
                                     seed=int(prm["seed"]), method=prm["method"], cells=int(prm["cells"]))]


def _cmd_h1_counterexample(cfg):
    return [ex.run_h1_counterexample(parse_list(cfg["params"]["N"], integer=True), grid=_grid(cfg))]


def _cmd_lp_counterexample(cfg):
    prm = cfg["params"]
    return [ex.run_lp_counterexample(float(prm["p"]), parse_list(prm["N"], integer=True), grid=_grid(cfg),
                                     n_samples=int(prm["n_samples"]), seed=int(prm["seed"]))]


def _cmd_all(cfg):
    reps = [ex.run_h1_counterexample()]
    reps += [ex.run_lp_counterexample(p) for p in (4.0 / 3.0, 3.0)]
    reps.append(ex.run_weak_type_failure())
    reps.append(ex.run_l1_blowup(0.5))
    reps += [ex.run_h1_l1_boundedness(rho) for rho in (0.0, 0.5)]
    reps.append(ex.run_kernel_bounds())
    return reps


_COMMANDS = {"check-symbol": _cmd_check_symbol, "apply": _cmd_apply, "kernel": _cmd_kernel,
             "h1-norm": _cmd_h1_norm, "l1-blowup": _cmd_l1_blowup, "weak-type": _cmd_weak_type,
             "h1l1-atoms": _cmd_h1l1, "h1-counterexample": _cmd_h1_counterexample,
             "lp-counterexample": _cmd_lp_counterexample, "all": _cmd_all}


def run(cfg: dict) -> tuple:
    """Run a validated configuration; returns (reports, report.json path)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # clamping warnings are recorded in the reports
        reports = _COMMANDS[cfg["command"]](cfg)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    for r in reports:
        r.write_tables(out, emit_plot_data=cfg["emit_plot_data"])
    doc = {"config": cfg, "version": __version__, "passed": all(r.passed for r in reports),
           "reports": [r.to_dict() for r in reports]}
    path = os.path.join(out, "report.json")
    with open(path, "w") as fh:
        json.dump(ex._jsonable(doc), fh, indent=2, sort_keys=True)
    return reports, path


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:  # argparse: usage errors exit with 2, --help/--version with 0
        return int(err.code or 0)
    try:
        cfg = effective_config(args)
        reports, path = run(cfg)
    except (ConfigError, ValueError) as err:
        print(f"endpoint-lab: error: {err}", file=sys.stderr)
        return 2
    if not args.quiet:
        for r in reports:
            for c in r.criteria:
                print(f"{'PASS' if c.passed else 'FAIL'}  {r.name}: {c.name} = {_short(c.value)}  ({c.tolerance})")
        print(f"report: {path}")
    return 0 if all(r.passed for r in reports) else 1


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list) and len(v) > 4:
        return "[" + ", ".join(_short(x) for x in v[:4]) + ", ...]"
    if isinstance(v, list):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
