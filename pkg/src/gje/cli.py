"""``gje`` command-line front end.

Usage::

    gje <command> --config problem.toml [--out report.json] [--strict] [--seed N]

Commands: validate, check-conditions, segment, transform, mate, height,
measure, probe, c1, suite. Exit status is 0 on success, 1 when ``--strict``
is given and the verdict is FAIL, 2 on configuration or numerical errors.

Config schema (TOML or JSON; see docs/config_schema.md for every key)::

    seed = 0

    [generating_function]
    family = "bilinear"          # bilinear | quad-cost | log-cost | sqrt-cost | perturbed-bilinear
    params = []                  # [eps] for perturbed-bilinear
    dim = 2
    x_box = [[-1.5, 1.5], [-1.5, 1.5]]
    y_box = [[-4.0, 4.0], [-4.0, 4.0]]
    z_box = [-50.0, 50.0]
    det_floor = 1e-8

    [potential]                  # preset = ... or file = "u.json" / "u.csv"
    preset = "quadratic"         # quadratic | kink | support | max-supports
    a = 1.0
    resolution = 96
    cell_centered = true

    [task]                       # keys of the chosen command
    regions = [[[0, 0], [1, 0], [1, 1], [0, 1]]]

    [output]
    report = "report.json"       # stdout when absent
    trace = "trace.csv"          # CSV traces for segment, height, probe, transform

Grid potential files: JSON ``{"axes": [a0, a1], "values": [[...], ...]}`` or
CSV whose first two rows are ``axis0,...`` and ``axis1,...`` followed by one
row of values per axis0 node.
"""

import argparse
import sys
from pathlib import Path

import numpy as np
import tomli

from . import __version__
from .errors import ConfigError, GJEError
from .genfun import FAMILIES, builtin, validate_assumptions
from .potentials import GridPotential, SemiDiscretePotential, grid_axes, preset
from .reports import config_hash, dumps, write_csv

COMMANDS = ("validate", "check-conditions", "segment", "transform", "mate", "height",
            "measure", "probe", "c1", "suite")
SECTIONS = {"seed", "generating_function", "potential", "task", "output"}
GF_KEYS = {"family", "params", "dim", "x_box", "y_box", "z_box", "det_floor"}
POT_KEYS = {"preset", "file", "a", "center", "offset", "y0", "z0", "perturb", "ys", "zs",
            "resolution", "cell_centered", "box"}


# ---------------------------------------------------------------------------
# config loading and field access


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        import json
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    else:
        try:
            cfg = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a table")
    unknown = set(cfg) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    return cfg


class Section:
    """Typed access to one config table with field-path error messages."""

    def __init__(self, data, name, allowed=None):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"[{name}] must be a table")
        if allowed is not None:
            bad = set(data) - allowed
            if bad:
                raise ConfigError(f"[{name}] unknown key(s): {', '.join(sorted(bad))}")
        self.data, self.name = data, name

    def __contains__(self, key):
        return key in self.data

    def _err(self, key, msg):
        return ConfigError(f"{self.name}.{key}: {msg}")

    def get(self, key, default=None, required=False):
        if key not in self.data:
            if required:
                raise self._err(key, "is required")
            return default
        return self.data[key]

    def num(self, key, default=None, required=False, positive=False):
        v = self.get(key, default, required)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self._err(key, f"expected a number, got {v!r}")
        if positive and not v > 0:
            raise self._err(key, "must be positive")
        return float(v)

    def int(self, key, default=None, required=False, minimum=1):
        v = self.get(key, default, required)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            raise self._err(key, f"expected an integer, got {v!r}")
        if v < minimum:
            raise self._err(key, f"must be at least {minimum}")
        return v

    def array(self, key, shape=None, default=None, required=False):
        v = self.get(key, default, required)
        if v is None:
            return None
        try:
            a = np.asarray(v, float)
        except (TypeError, ValueError):
            raise self._err(key, "expected a numeric array") from None
        if shape is not None:
            if a.ndim != len(shape) or any(s is not None and s != d for s, d in zip(shape, a.shape)):
                raise self._err(key, f"expected shape {shape}, got {a.shape}")
        return a


def build_gf(cfg):
    s = Section(cfg.get("generating_function"), "generating_function", GF_KEYS)
    family = s.get("family", required=True)
    if family not in FAMILIES:
        raise ConfigError(f"generating_function.family: unknown family {family!r}; "
                          f"expected one of {', '.join(FAMILIES)}")
    dim = s.int("dim", 2)
    try:
        return builtin(family, params=s.get("params", []), dim=dim,
                      x_box=s.array("x_box", (dim, 2)), y_box=s.array("y_box", (dim, 2)),
                      z_box=s.array("z_box", (2,)), det_floor=s.num("det_floor", 1e-8, positive=True))
    except ValueError as exc:
        raise ConfigError(f"generating_function: {exc}") from None


def build_potential(cfg, gf, base_dir, allow_semi=False):
    """GridPotential (and the SemiDiscretePotential when the preset is one)."""
    s = Section(cfg.get("potential"), "potential", POT_KEYS)
    if "file" in s and "preset" in s:
        raise ConfigError("potential: give either 'file' or 'preset', not both")
    if "file" in s:
        path = Path(base_dir) / s.get("file")
        if not path.is_file():
            raise ConfigError(f"potential.file: {path} does not exist")
        text = path.read_text(encoding="utf-8")
        u = GridPotential.from_csv(text) if path.suffix.lower() == ".csv" else GridPotential.from_json(text)
        return u, None
    name = s.get("preset", required=True)
    box = s.array("box", (gf.dim, 2))
    box = gf.gamma.x_box if box is None else box
    ax = grid_axes(box, s.int("resolution", 96, minimum=4), cell_centered=bool(s.get("cell_centered", True)))
    kw = {k: s.data[k] for k in ("a", "center", "offset", "y0", "z0", "perturb", "ys", "zs") if k in s}
    try:
        f = preset(name, gf, **kw)
    except KeyError as exc:
        raise ConfigError(f"potential.{exc.args[0]}: is required by preset {name!r}") from None
    if isinstance(f, SemiDiscretePotential):
        return f.to_grid(ax), (f if allow_semi else None)
    return GridPotential.from_function(f, ax), None


def _support(task, gf, u, at):
    if "y0" in task or "z0" in task:
        return task.array("y0", (gf.dim,), required=True), task.num("z0", required=True)
    from .probe import tangent_support
    return tangent_support(gf, u, at)


# ---------------------------------------------------------------------------
# commands; each returns (verdict, result, trace) with trace = (header, rows) or None


def cmd_validate(cfg, task, seed, base):
    gf = build_gf(cfg)
    rep = validate_assumptions(gf, resolution=task.int("resolution", 5, minimum=2),
                               a1_points=task.int("a1_points", 8), a1_seeds=task.int("a1_seeds", 8),
                               seed=seed, tol=task.num("tol", 1e-6, positive=True))
    d = rep.to_dict()
    return d["verdict"], d, None


def cmd_check_conditions(cfg, task, seed, base):
    from .conditions import scan_conditions
    gf = build_gf(cfg)
    rep = scan_conditions(gf, resolution=task.int("resolution", 4, minimum=2),
                          directions=task.int("directions", 16), n_tuples=task.int("n_tuples", 64),
                          seed=seed, tol=task.num("tol", 1e-6, positive=True))
    d = rep.to_dict()
    return d["verdict"], d, None


def cmd_segment(cfg, task, seed, base):
    from .errors import SegmentExitsDomain
    from .segments import g_segment
    gf = build_gf(cfg)
    n = gf.dim
    args = dict(x_start=task.array("x_start", (n,), required=True),
                x_end=task.array("x_end", (n,), required=True),
                y0=task.array("y0", (n,), required=True), z0=task.num("z0", required=True))
    try:
        seg = g_segment(gf, resolution=task.int("resolution", 129, minimum=2), **args)
    except SegmentExitsDomain as exc:
        return "FAIL", {"exits_domain": True, "theta": exc.theta, "point": exc.point,
                        "reason": str(exc)}, None
    res = {"exits_domain": False, "max_residual": seg.max_residual, "n_samples": len(seg.theta),
           "q0": seg.q0, "q1": seg.q1, "x_end": seg.x[-1]}
    return ("PASS" if seg.max_residual < 1e-9 else "FAIL"), res, (seg.header(), seg.to_rows())


def cmd_transform(cfg, task, seed, base):
    from .duality import default_dual_box, dual_grid, g_star_transform
    gf = build_gf(cfg)
    u, _ = build_potential(cfg, gf, base)
    box = task.array("dual_box", (2, 2))
    box = default_dual_box(gf, u) if box is None else box
    kind = task.get("grid", "nodes")
    if kind not in ("nodes", "cells"):
        raise ConfigError("task.grid: expected 'nodes' or 'cells'")
    T = g_star_transform(gf, u, dual_grid(box, task.int("dual_resolution", 128, minimum=2), kind))
    ok = T.valid
    counts = T.counts()
    res = {"dual_box": box, "n_dual_points": len(T.values), "n_invalid": T.n_invalid,
           "v_min": float(T.values[ok].min()) if ok.any() else None,
           "v_max": float(T.values[ok].max()) if ok.any() else None,
           "max_argmax_count": int(counts.max()), "n_ties": int((counts > 1).sum())}
    ys = T.y_points
    rows = [[*y, v, c] for y, v, c in zip(ys, T.values, counts)]
    return ("PASS" if T.n_invalid == 0 else "FAIL"), res, (["y0", "y1", "v", "n_argmax"], rows)


def cmd_mate(cfg, task, seed, base):
    from .mate import DY_from_hessian, check_E_is_DpY, mate_coefficients
    gf = build_gf(cfg)
    u, _ = build_potential(cfg, gf, base)
    pts = task.array("points", (None, gf.dim), required=True)
    tol = task.num("tol", 1e-5, positive=True)
    rows, worst = [], 0.0
    for x in pts:
        uu, p, H = float(u(x)), u.gradient(x), u.hessian(x)
        mc = mate_coefficients(gf, x, uu, p)
        DY, det = DY_from_hessian(gf, x, uu, p, H)
        err = check_E_is_DpY(gf, x, uu, p)
        worst = max(worst, err)
        rows.append({"x": x, "u": uu, "p": p, "Y": mc.contact.y, "Z": mc.contact.z, "E": mc.E,
                     "det_E": mc.detE, "A": mc.A, "B": mc.B(), "DY": DY, "det_DY": det,
                     "E_inv_vs_DpY": err})
    return ("PASS" if worst < tol else "FAIL"), {"points": rows, "worst_E_inv_vs_DpY": worst}, None


def cmd_height(cfg, task, seed, base):
    from .height import height_trace
    from .segments import g_segment
    gf = build_gf(cfg)
    u, _ = build_potential(cfg, gf, base)
    n = gf.dim
    a = task.array("x_start", (n,), required=True)
    b = task.array("x_end", (n,), required=True)
    y0, z0 = _support(task, gf, u, 0.5 * (a + b))
    seg = g_segment(gf, a, b, y0, z0, task.int("resolution", 129, minimum=9))
    tr = height_trace(gf, u, seg, sigma=task.num("sigma", 0.0), support=(y0, z0))
    margin = tr.inequality_margin()
    tol = task.num("tol", 1e-4, positive=True)
    good = margin[np.isfinite(margin)] >= -tol
    frac = float(good.mean()) if good.size else 0.0
    res = {**tr.to_dict(), "fraction_satisfied": frac, "min_margin": float(np.nanmin(margin)),
           "tol": tol}
    return ("PASS" if frac >= 0.99 else "FAIL"), res, (["theta", "h", "h_prime", "h_second", "rhs_lower"],
                                                      tr.rows())


def cmd_measure(cfg, task, seed, base):
    from .measure import alexandrov_verdict, gma_measure_nonsmooth, gma_measure_smooth
    gf = build_gf(cfg)
    u, semi = build_potential(cfg, gf, base, allow_semi=True)
    regions = task.get("regions", required=True)
    if not isinstance(regions, list) or not regions:
        raise ConfigError("task.regions: expected a non-empty list of polygons")
    method = task.get("method", "box")
    if method not in ("box", "smooth", "both"):
        raise ConfigError("task.method: expected 'box', 'smooth' or 'both'")
    res_d = task.int("dual_resolution", 256, minimum=2)
    reports = []
    for k, E in enumerate(regions):
        try:
            poly = np.asarray(E, float)
        except (TypeError, ValueError):
            raise ConfigError(f"task.regions[{k}]: expected a list of [x, y] vertices") from None
        if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
            raise ConfigError(f"task.regions[{k}]: expected at least 3 [x, y] vertices")
        if method in ("smooth", "both"):
            reports.append(gma_measure_smooth(gf, u, poly))
        if method in ("box", "both"):
            reports.append(gma_measure_nonsmooth(gf, semi if semi is not None else u, poly,
                                                 dual_resolution=res_d))
    av = alexandrov_verdict(reports, c=task.num("c"), C=task.num("C"))
    av["reports"] = [r.to_dict() for r in reports]
    return av["verdict"], av, None


def cmd_probe(cfg, task, seed, base):
    from .probe import strict_convexity_probe
    gf = build_gf(cfg)
    u, _ = build_potential(cfg, gf, base)
    a = task.array("x_m1", (2,), required=True)
    b = task.array("x_1", (2,), required=True)
    sup = _support(task, gf, u, 0.5 * (a + b))
    rep = strict_convexity_probe(gf, u, sup, a, b, sigma=task.num("sigma"), delta=task.num("delta"),
                                 c=task.num("c"), theta_res=task.int("theta_resolution", 129, minimum=9),
                                 eps_res=task.int("eps_resolution", 33, minimum=2),
                                 slack=task.num("slack", 0.05), lip_cap=task.num("lip_cap", 10.0))
    t = rep.traces
    return ("PASS" if rep.verdict == "STRICT" else "FAIL"), rep.to_dict(), (
        ["theta", "h_sigma"], list(zip(t["theta"], t["h_sigma"])))


def cmd_c1(cfg, task, seed, base):
    from .probe import c1_check
    gf = build_gf(cfg)
    u, _ = build_potential(cfg, gf, base)
    rep = c1_check(gf, u, dual_resolution=task.int("dual_resolution", 128, minimum=2),
                   dual_box=task.array("dual_box", (2, 2)), separation=task.num("separation"))
    return ("PASS" if rep["verdict"] == "C1_PLAUSIBLE" else "FAIL"), rep, None


def cmd_suite(cfg, task, seed, base):
    from .probe import theorem_consistency_suite
    rep = theorem_consistency_suite(seed=seed, dual_resolution=task.int("dual_resolution", 128, minimum=4))
    return rep["verdict"], rep, None


HANDLERS = {"validate": cmd_validate, "check-conditions": cmd_check_conditions,
            "segment": cmd_segment, "transform": cmd_transform, "mate": cmd_mate,
            "height": cmd_height, "measure": cmd_measure, "probe": cmd_probe, "c1": cmd_c1,
            "suite": cmd_suite}


HELP = {"validate": "check assumptions A0-A2 on a sampled domain",
        "check-conditions": "scan the A3w and A4w conditions",
        "segment": "sample a g-segment and write its trace",
        "transform": "g*-transform of a potential on a dual grid",
        "mate": "E, A, B and DY at given points",
        "height": "height function along a g-segment against its lower bound",
        "measure": "g-Monge-Ampere measure of polygons with Alexandrov bounds",
        "probe": "quantitative strict g-convexity probe (2D)",
        "c1": "differentiability check through the dual transform",
        "suite": "implication table over the built-in fixtures"}


# ---------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="gje", description="Generated Jacobian equation toolkit")
    ap.add_argument("--version", action="version", version=f"gje {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", required=name != "suite", help="TOML or JSON problem config")
        p.add_argument("--out", help="report path (overrides output.report; '-' for stdout)")
        p.add_argument("--strict", action="store_true", help="exit 1 when the verdict is FAIL")
        p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    return ap


def run(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = load_config(args.config) if args.config else {}
        base = Path(args.config).parent if args.config else Path.cwd()
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError(f"seed: expected an integer, got {seed!r}")
        task = Section(cfg.get("task"), "task")
        out = Section(cfg.get("output"), "output", {"report", "trace"})
        verdict, result, trace = HANDLERS[args.command](cfg, task, seed, base)
    except ConfigError as exc:
        print(f"gje: config error: {exc}", file=sys.stderr)
        return 2
    except (GJEError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"gje: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    report = {"tool": "gje", "version": __version__, "command": args.command,
              "config_hash": config_hash({"config": cfg, "seed": seed}), "seed": seed,
              "verdict": verdict, "result": result}
    text = dumps(report)
    # --out is relative to the working directory, config paths to the config file
    dest = Path(args.out) if args.out else (base / out.get("report") if out.get("report") else None)
    if dest is not None and str(dest) != "-":
        dest.write_text(text, encoding="utf-8")
        print(f"{args.command}: {verdict} -> {dest}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    if trace is not None and out.get("trace"):
        write_csv(base / out.get("trace"), *trace)
    return 1 if (args.strict and verdict == "FAIL") else 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
