"""Command line front end: sweeps, matching enumeration, gluing experiments and reports.

Each subcommand resolves its parameters as defaults < --config file < explicit
flags, validates them, and writes outputs that embed the resolved config.
Failures exit nonzero with a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import io as cio
from .blocks import DFunctions
from .delaunay import (DelaunaySurface, _quad_T, check_tau, half_period, period_derivative,
                       solve_profile, turning_point)
from .floquet import monodromy_batch
from .gluing import (NECK_NODES_PER_PERIOD, NECK_N_THETA, decay_summary, matching_function,
                     minimal_n, neck_sweep_row, solve_matching, y_neck)
from .geometry import Grid, Patch, normal_graph, theta_grid

OUT_ENV = "CMCGLUE_OUT"

DEFAULTS = {
    "profile": {"tau": None, "periods": 1, "grid_s": 512, "grid_theta": 64, "tol": 1e-10,
                "format": "csv"},
    "periods": {"tau_lo": 0.1, "tau_hi": 0.9, "steps": 9, "tol": 1e-10, "format": "csv",
                "jobs": 1},
    "indicial": {"tau": None, "tau_lo": None, "tau_hi": None, "steps": 1, "j_max": 4,
                 "tol": 1e-8, "format": "csv", "jobs": 1},
    "match": {"k": 3, "n": None, "n_lo": None, "n_hi": None, "tau_lo": 0.2, "tau_hi": 0.8,
              "tol": 1e-12, "d_model": None, "format": "json"},
    "glue": {"k": 3, "tau": 0.5, "n_lo": 4, "n_hi": 12, "grid_s": NECK_NODES_PER_PERIOD,
             "grid_theta": NECK_N_THETA, "d_model": None, "format": "json", "jobs": 1,
             "fields": True},
    "report": {"k": 3, "tau": 0.5, "n": 20, "n_lo": 4, "n_hi": 12, "tau_lo": 0.2,
               "tau_hi": 0.8, "steps": 9, "j_max": 4, "grid_s": NECK_NODES_PER_PERIOD,
               "grid_theta": NECK_N_THETA, "d_model": None, "jobs": 1, "fields": True},
}

FORMATS = {
    "profile": ("csv", "json", "obj", "ply"),
    "periods": ("csv", "json"),
    "indicial": ("csv", "json"),
    "match": ("csv", "json"),
    "glue": ("csv", "json", "obj", "ply"),
    "report": ("csv", "json"),
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("usage", message, code=2)


def _fail(kind: str, message: str, code: int = 1):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    raise SystemExit(code)


# ------------------------------------------------------------------ config

def resolve_config(command: str, flags: dict, config_path: str | None = None) -> dict:
    """defaults < config file < flags given on the command line (non-None)."""
    cfg = dict(DEFAULTS[command])
    if config_path:
        with open(config_path) as fh:
            data = json.load(fh)
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]  # accept an output file as its own config
        data = {k: v for k, v in data.items() if k not in ("command", "version")}
        unknown = set(data) - set(cfg) - {"out"}
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(data)
    cfg.update({k: v for k, v in flags.items() if v is not None and k in cfg})
    validate(command, cfg)
    return cfg


def validate(command: str, cfg: dict) -> None:
    if "tol" in cfg and not cfg["tol"] > 0:
        raise ConfigError("tol must be positive")
    if "k" in cfg and int(cfg["k"]) < 3:
        raise ConfigError("k must be >= 3")
    if cfg.get("format") not in (None,) + FORMATS[command]:
        raise ConfigError(f"{command} does not write {cfg['format']!r}")
    for lo, hi in (("tau_lo", "tau_hi"), ("n_lo", "n_hi")):
        if cfg.get(lo) is not None and cfg.get(hi) is not None and cfg[lo] > cfg[hi]:
            raise ConfigError(f"empty range {lo}={cfg[lo]} > {hi}={cfg[hi]}")
    for key in ("steps", "jobs", "grid_s", "grid_theta", "periods"):
        if key in cfg and cfg[key] is not None and int(cfg[key]) < 1:
            raise ConfigError(f"{key} must be >= 1")
    if command == "profile" and cfg["tau"] is None:
        raise ConfigError("profile needs --tau")
    if command == "indicial" and cfg["tau"] is None and (cfg["tau_lo"] is None or cfg["tau_hi"] is None):
        raise ConfigError("indicial needs --tau or --tau-lo/--tau-hi")
    if command == "match" and cfg["n"] is None and (cfg["n_lo"] is None or cfg["n_hi"] is None):
        raise ConfigError("match needs --n or --n-lo/--n-hi")
    if command in ("glue", "report") and cfg["n_lo"] < 1:
        raise ConfigError("n must be >= 1")


def _d_model(cfg) -> DFunctions:
    return DFunctions.from_json(cfg["d_model"]) if cfg.get("d_model") else DFunctions()


def _tau_range(lo, hi, steps):
    taus = np.linspace(float(lo), float(hi), int(steps)) if steps > 1 else np.array([float(lo)])
    if lo < 0 < hi or 0.0 in taus:
        raise ConfigError("tau range must not contain 0")
    return [float(t) for t in taus]


def _out_dir(out: str | None) -> Path:
    path = Path(out or os.environ.get(OUT_ENV) or "cmcglue_out")
    if path.exists() and not path.is_dir():
        raise ConfigError(f"output path {path} is not a directory")
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path} is not writable")
    return path


def _map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# ------------------------------------------------------------------ workers

def period_row(tau: float) -> list:
    tau = check_tau(tau)
    if tau == 1.0:
        # cylinder: limiting half-period; one-sided derivative from inside the branch
        h = 1e-4
        return [tau, 0.0, math.pi, math.pi / 2, (math.pi / 2 - _quad_T(1 - h)) / h]
    return [tau, turning_point(tau), half_period(tau), _quad_T(tau), period_derivative(tau)]


def indicial_rows(args) -> list:
    tau, j_max, tol = args
    rows = []
    for f in monodromy_batch(tau, range(j_max + 1), tol):
        rows.append([tau, f.j, f.trace, f.det_error, f.zeta_real, f.periodic_case])
    return rows


def _glue_row(args):
    tau, k, n, spec, grid_s, grid_theta, fields = args
    d = DFunctions(spec) if spec else None
    return neck_sweep_row(tau, k, n, d, grid_s, grid_theta, fields)


# ------------------------------------------------------------------ commands

def cmd_profile(cfg, out: Path) -> list[Path]:
    prof = solve_profile(cfg["tau"], int(cfg["periods"]), cfg["tol"], int(cfg["grid_s"]))
    fmt = cfg["format"]
    if fmt == "csv":
        rows = zip(prof.s_grid, prof.sigma, prof.dsigma, prof.kappa)
        return [cio.write_csv(out / "profile.csv", ["s", "sigma", "dsigma", "kappa"], rows, cfg)]
    if fmt == "json":
        return [cio.write_json(out / "profile.json", {"profile": cio.profile_to_dict(prof)}, cfg)]
    S, T = Grid(prof.s_grid, theta_grid(int(cfg["grid_theta"]))).mesh()
    X, _ = DelaunaySurface(prof).canonical(S, T)
    writer = cio.write_obj if fmt == "obj" else cio.write_ply
    return [writer(out / f"profile.{fmt}", X, "config " + json.dumps(cfg, sort_keys=True))]


def cmd_periods(cfg, out: Path) -> list[Path]:
    taus = _tau_range(cfg["tau_lo"], cfg["tau_hi"], cfg["steps"])
    rows = _map(period_row, taus, int(cfg["jobs"]))
    header = ["tau", "sigma_star", "s_tau", "T_tau", "dT_dtau"]
    if cfg["format"] == "json":
        return [cio.write_json(out / "periods.json",
                               {"rows": [dict(zip(header, r)) for r in rows]}, cfg)]
    return [cio.write_csv(out / "periods.csv", header, rows, cfg)]


def cmd_indicial(cfg, out: Path) -> list[Path]:
    if cfg["tau"] is not None:
        taus = [float(cfg["tau"])]
    else:
        taus = _tau_range(cfg["tau_lo"], cfg["tau_hi"], cfg["steps"])
    chunks = _map(indicial_rows, [(t, int(cfg["j_max"]), cfg["tol"]) for t in taus],
                  int(cfg["jobs"]))
    rows = [r for c in chunks for r in c]
    header = ["tau", "j", "trace", "det_error", "gamma", "periodic"]
    if cfg["format"] == "json":
        return [cio.write_json(out / "indicial.json",
                               {"rows": [dict(zip(header, r)) for r in rows]}, cfg)]
    return [cio.write_csv(out / "indicial.csv", header, rows, cfg)]


def _match_payload(cfg):
    d = _d_model(cfg)
    k = int(cfg["k"])
    interval = (float(cfg["tau_lo"]), float(cfg["tau_hi"]))
    ns = [int(cfg["n"])] if cfg["n"] is not None else list(range(int(cfg["n_lo"]), int(cfg["n_hi"]) + 1))
    sols, mono = [], True
    for n in ns:
        s, m = solve_matching(n, k, interval, d, cfg["tol"])
        sols += s
        mono &= m
    bad = [s for s in sols if abs(s.residual) > cfg["tol"] * 100]
    if bad:
        raise RuntimeError(f"{len(bad)} matching solutions exceed the residual tolerance")
    return {"k": k, "n_min": minimal_n(k, interval, d), "monotone": mono,
            "solutions": [s.to_dict() for s in sols]}, sols


def cmd_match(cfg, out: Path) -> list[Path]:
    payload, sols = _match_payload(cfg)
    if cfg["format"] == "csv":
        header = ["n", "m", "tau", "tau_bar", "residual", "k"]
        return [cio.write_csv(out / "match.csv", header, [[s.to_dict()[h] for h in header] for s in sols], cfg)]
    return [cio.write_json(out / "match.json", payload, cfg)]


def _glue_rows(cfg):
    spec = _d_model(cfg).spec
    ns = range(int(cfg["n_lo"]), int(cfg["n_hi"]) + 1)
    args = [(float(cfg["tau"]), int(cfg["k"]), n, spec, int(cfg["grid_s"]), int(cfg["grid_theta"]),
             bool(cfg["fields"])) for n in ns]
    return _map(_glue_row, args, int(cfg["jobs"]))


def cmd_glue(cfg, out: Path) -> list[Path]:
    fmt = cfg["format"]
    if fmt in ("obj", "ply"):
        neck = y_neck(float(cfg["tau"]), int(cfg["k"]), int(cfg["n_lo"]), _d_model(cfg))
        prof = solve_profile(neck.tau, n_periods=1)
        L = neck.half_window
        s = np.linspace(-L, L, int(cfg["grid_s"]) * neck.periods + 1)
        grid = Grid(s, theta_grid(int(cfg["grid_theta"])))
        S, T = grid.mesh()
        X, _ = DelaunaySurface(prof).canonical(S + neck.model_shift, T)
        surf = normal_graph(Patch.from_positions(grid, X), neck.blended_graph(S, T))
        writer = cio.write_obj if fmt == "obj" else cio.write_ply
        return [writer(out / f"neck.{fmt}", surf.positions, "config " + json.dumps(cfg, sort_keys=True))]
    rows = _glue_rows(cfg)
    summary = decay_summary(float(cfg["tau"]), rows)
    if fmt == "csv":
        header = list(rows[0])
        return [cio.write_csv(out / "glue.csv", header, [[r[h] for h in header] for r in rows], cfg)]
    return [cio.write_json(out / "glue.json", {"rows": rows, "fit": summary}, cfg)]


def cmd_report(cfg, out: Path) -> list[Path]:
    from . import plotting

    files = []
    tau, k = float(cfg["tau"]), int(cfg["k"])
    jobs = int(cfg["jobs"])

    prof = solve_profile(tau)
    files.append(plotting.plot_profile(prof, out / "profile.png"))

    taus = _tau_range(-1.0, -0.1, cfg["steps"]) + _tau_range(0.1, 0.9, cfg["steps"])
    prow = _map(period_row, taus, jobs)
    files.append(cio.write_csv(out / "periods.csv", ["tau", "sigma_star", "s_tau", "T_tau", "dT_dtau"],
                               prow, cfg))
    pr = np.array(prow)
    files.append(plotting.plot_periods(pr[:, 0], pr[:, 3], pr[:, 4], out / "periods.png"))

    chunks = _map(indicial_rows, [(t, int(cfg["j_max"]), 1e-8) for t in taus], jobs)
    irows = [r for c in chunks for r in c]
    files.append(cio.write_csv(out / "indicial.csv", ["tau", "j", "trace", "det_error", "gamma", "periodic"],
                               irows, cfg))
    files.append(plotting.plot_indicial([(r[0], r[1], r[4]) for r in irows], out / "indicial.png"))

    mcfg = dict(cfg, n=int(cfg["n"]), n_lo=None, n_hi=None, tol=1e-12)
    payload, sols = _match_payload(mcfg)
    files.append(cio.write_json(out / "match.json", payload, cfg))
    grid = np.linspace(cfg["tau_lo"], cfg["tau_hi"], 200)
    f = matching_function(int(cfg["n"]), k, _d_model(cfg))
    files.append(plotting.plot_matching(grid, [f(t) for t in grid], sols, out / "matching.png"))

    rows = _glue_rows(cfg)
    summary = decay_summary(tau, rows)
    files.append(cio.write_json(out / "glue.json", {"rows": rows, "fit": summary}, cfg))
    series = {"sup |H - 1|": [r["sup_H_dev"] for r in rows]}
    if cfg["fields"]:
        series["T_bar residual"] = [r["T_bar_residual"] for r in rows]
    files.append(plotting.plot_decay([r["n"] for r in rows], series, summary["target_slope"],
                                     out / "decay.png"))
    files.append(cio.write_json(out / "report.json", {
        "files": [p.name for p in files],
        "n_min": payload["n_min"],
        "matching_monotone": payload["monotone"],
        "decay": summary,
    }, cfg))
    return files


COMMANDS = {"profile": cmd_profile, "periods": cmd_periods, "indicial": cmd_indicial,
            "match": cmd_match, "glue": cmd_glue, "report": cmd_report}


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cmcglue", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt=True, jobs=False, tol=True):
        sp.add_argument("--config", help="JSON file of parameters; flags override it")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./cmcglue_out)")
        if fmt:
            sp.add_argument("--format", choices=("csv", "json", "obj", "ply"))
        if jobs:
            sp.add_argument("--jobs", type=int, help="worker processes for sweeps")
        if tol:
            sp.add_argument("--tol", type=float)

    def tau_range(sp):
        sp.add_argument("--tau-lo", "--tau-min", dest="tau_lo", type=float)
        sp.add_argument("--tau-hi", "--tau-max", dest="tau_hi", type=float)
        sp.add_argument("--steps", type=int)

    sp = sub.add_parser("profile", help="Delaunay profile samples or surface mesh")
    sp.add_argument("--tau", type=float)
    sp.add_argument("--periods", type=int)
    sp.add_argument("--grid-s", type=int, help="nodes per period")
    sp.add_argument("--grid-theta", type=int)
    common(sp)

    sp = sub.add_parser("periods", help="table of tau, sigma_*, s_tau, T_tau, dT/dtau")
    tau_range(sp)
    common(sp, jobs=True)

    sp = sub.add_parser("indicial", help="Floquet indicial roots per angular mode")
    sp.add_argument("--tau", type=float)
    tau_range(sp)
    sp.add_argument("--j-max", type=int)
    common(sp, jobs=True)

    sp = sub.add_parser("match", help="enumerate matching solutions")
    sp.add_argument("--k", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--n-lo", type=int)
    sp.add_argument("--n-hi", type=int)
    sp.add_argument("--tau-lo", type=float)
    sp.add_argument("--tau-hi", type=float)
    sp.add_argument("--d-model", help="JSON file (or inline JSON) with d0, d0bar, d1")
    common(sp)

    for name, help_ in (("glue", "neck decay sweep over n"),
                        ("report", "full pipeline with figures")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--k", type=int)
        sp.add_argument("--tau", type=float)
        sp.add_argument("--n-lo", type=int)
        sp.add_argument("--n-hi", type=int)
        sp.add_argument("--grid-s", type=int, help="nodes per period")
        sp.add_argument("--grid-theta", type=int)
        sp.add_argument("--d-model")
        sp.add_argument("--no-fields", dest="fields", action="store_const", const=False,
                        help="skip Jacobi extension residuals")
        if name == "report":
            sp.add_argument("--n", type=int, help="n for the matching figure")
            sp.add_argument("--tau-lo", type=float)
            sp.add_argument("--tau-hi", type=float)
            sp.add_argument("--steps", type=int)
            sp.add_argument("--j-max", type=int)
        common(sp, fmt=(name == "glue"), jobs=True, tol=False)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    flags = vars(args).copy()
    command = flags.pop("command")
    config_path = flags.pop("config", None)
    out = flags.pop("out", None)
    try:
        cfg = resolve_config(command, flags, config_path)
        cfg = {"command": command, "version": __version__, **cfg}
        out_dir = _out_dir(out or cfg.get("out"))
        run_cfg = {k: v for k, v in cfg.items() if k != "out"}
        files = COMMANDS[command](run_cfg, out_dir)
    except (ConfigError, json.JSONDecodeError) as exc:
        _fail("config", str(exc))
    except OSError as exc:
        _fail("io", str(exc))
    except (ValueError, RuntimeError, ZeroDivisionError) as exc:
        _fail(type(exc).__name__, str(exc))
    for f in files:
        print(f)
    return 0
