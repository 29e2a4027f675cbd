"""Command-line front end.

Every option is a plain string on the command line and in config files;
each command parses what it needs.  Options may come from a flat
``key = value`` file (``--config``) or from the ``"config"`` object of a
JSON output, with explicit flags taking precedence.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import atlas
from .core import (
    KIND_FROM_CODE,
    UNPERTURBED_LABELS,
    GyroSystem2D,
    InvalidSystem,
    ParamPoint,
    char_coeffs,
    check_skew,
    check_symmetric,
    quartic_roots_batch,
    unperturbed_spectrum,
)
from .perturb import asymptotic_eigs_grid
from .rotating_string import (
    StringParams,
    exact_pair,
    mesh_nodes,
    node_split,
    zero_speed_node,
)
from .tracking import best_assignment, continue_branches

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 2, 3
DEFAULT_SWEEP_POINTS = 13


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# parsing helpers


def parse_float(name: str, text: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a number, got {text!r}") from None


def parse_int(name: str, text: str) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected an integer, got {text!r}") from None


def parse_range(name: str, text: str) -> np.ndarray:
    """``"lo:hi:n"`` (``n >= 2`` linearly spaced values) or a single number."""
    parts = str(text).split(":")
    if len(parts) == 1:
        return np.array([parse_float(name, parts[0])])
    if len(parts) != 3:
        raise ConfigError(f"{name}: expected lo:hi:n, got {text!r}")
    lo, hi = parse_float(name, parts[0]), parse_float(name, parts[1])
    n = parse_int(name, parts[2])
    if n < 2:
        raise ConfigError(f"{name}: resolution must be at least 2")
    return np.linspace(lo, hi, n)


def parse_matrix(text: str, role: str = "D") -> np.ndarray:
    """Row-major ``"a,b,c,d"`` as a 2x2 matrix checked against its role.

    ``D`` and ``K`` must be symmetric; ``G`` and ``N`` skew-symmetric and
    nonzero.
    """
    role = role.upper()
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise ConfigError(f"{role}: entries must be numbers, got {text!r}") from None
    if len(vals) != 4:
        raise ConfigError(f"{role}: expected 4 comma-separated entries, got {len(vals)}")
    m = np.array(vals).reshape(2, 2)
    try:
        if role in ("D", "K"):
            check_symmetric(role, m)
        elif role in ("G", "N"):
            check_skew(role, m)
            if m[0, 1] == 0:
                raise InvalidSystem(f"{role} must be nonzero skew-symmetric")
        else:
            raise ConfigError(f"unknown matrix role {role!r}")
    except InvalidSystem as exc:
        raise ConfigError(str(exc)) from None
    return m


def parse_sweep(text: str) -> tuple[list[str], np.ndarray]:
    """``"name[,name...]=lo:hi[:n]"`` as parameter names and log-spaced scales."""
    if "=" not in str(text):
        raise ConfigError(f"sweep: expected names=lo:hi[:n], got {text!r}")
    names, rng = str(text).split("=", 1)
    names = [s.strip() for s in names.split(",") if s.strip()]
    for nm in names:
        if nm not in ("delta", "kappa", "nu", "omega"):
            raise ConfigError(f"sweep: unknown parameter {nm!r}")
    parts = rng.split(":")
    if len(parts) not in (2, 3):
        raise ConfigError(f"sweep: expected lo:hi[:n], got {rng!r}")
    lo, hi = parse_float("sweep", parts[0]), parse_float("sweep", parts[1])
    n = parse_int("sweep", parts[2]) if len(parts) == 3 else DEFAULT_SWEEP_POINTS
    if lo <= 0 or hi <= 0:
        raise ConfigError("sweep: scales must be positive")
    if n < 2:
        raise ConfigError("sweep: resolution must be at least 2")
    return names, np.geomspace(lo, hi, n)


def load_config(path: str) -> dict[str, str]:
    """Read a flat ``key = value`` file, or the ``"config"`` object of a JSON output."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from None
        cfg = obj.get("config")
        if not isinstance(cfg, dict):
            raise ConfigError(f"{path}: JSON has no 'config' object")
        return {_norm(k): str(v) for k, v in cfg.items()}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = line.split("=", 1)
        out[_norm(key.strip())] = val.strip()
    return out


def _norm(key: str) -> str:
    return key.replace("-", "_")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x) + 0.0:.16e}"  # no negative zero


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory and rename."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# results


@dataclass
class Table:
    columns: list[str]
    rows: list[list]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def to_json_rows(self) -> list[list]:
        return [[v if isinstance(v, str) else (int(v) if isinstance(v, (int, np.integer)) else float(v))
                 for v in row] for row in self.rows]


@dataclass
class Result:
    table: Table
    meta: dict = field(default_factory=dict)
    extra: dict[str, Table] = field(default_factory=dict)
    converged: bool = True


# --------------------------------------------------------------------------
# option tables

SYSTEM_OPTS = {
    "beta": ("1", "natural frequency of the unperturbed system"),
    "d": ("1,0,0,1", "damping matrix D, row-major"),
    "k": ("0,0,0,0", "stiffness perturbation K, row-major"),
    "g": ("0,1,-1,0", "gyroscopic matrix G, row-major skew"),
    "n": ("0,1,-1,0", "circulatory matrix N, row-major skew"),
}
PARAM_OPTS = {
    "delta": ("0", "damping parameter"),
    "kappa": ("0", "stiffness parameter"),
    "nu": ("0", "circulatory parameter"),
}
TOL_OPT = {"tol": ("1e-8", "marginal-stability tolerance on max Re")}

COMMANDS: dict[str, dict] = {
    "mesh2d": {
        "help": "exact spectrum of the unperturbed 2-DOF system over an Omega range",
        "opts": {"beta": SYSTEM_OPTS["beta"], "omega": ("-2:2:401", "Omega range lo:hi:n")},
    },
    "trajectory": {
        "help": "exact and first-order eigenvalues of a perturbed system over an Omega range",
        "opts": {**SYSTEM_OPTS, **PARAM_OPTS, "omega": ("-0.1:0.1:201", "Omega range lo:hi:n")},
    },
    "stability-map": {
        "help": "classify a 2-D or 3-D grid over delta, nu, omega, kappa",
        "opts": {**SYSTEM_OPTS, **PARAM_OPTS, **TOL_OPT,
                 "omega": ("0", "fixed Omega when not an axis"),
                 "axes": ("delta=0:0.02:101,omega=-0.02:0.02:101",
                          "comma-separated name=lo:hi:n axes"),
                 "provenance": ("oracle", "oracle | asymptotic"),
                 "budget": ("10000000", "maximum number of grid cells")},
    },
    "boundary-section": {
        "help": "Omega = const section of the flutter boundary in the (delta, nu) plane",
        "opts": {**SYSTEM_OPTS, "omega": ("0.1", "section Omega"),
                 "samples": ("401", "number of delta samples"),
                 "delta_max": ("", "half-width of the delta range (default: loop extent)")},
    },
    "string-mesh": {
        "help": "spectral mesh and node list of the unloaded rotating string",
        "opts": {"nmax": ("30", "largest mode index"),
                 "omega": ("0:0.999:500", "Omega range lo:hi:n"),
                 "nodes_out": ("", "path of the node list (default: <out>.nodes.csv)")},
    },
    "string-split": {
        "help": "exact and first-order splitting of the Omega = 0 node i*n of the loaded string",
        "opts": {"mode": ("1", "mode index n of the node"),
                 "k": ("0", "spring stiffness"), "d": ("0", "damper coefficient"),
                 "mu": ("0", "friction coefficient"),
                 "omega": ("0:0.1:101", "Omega range lo:hi:n")},
    },
    "compare": {
        "help": "first-order vs exact eigenvalues over a log-spaced scale sweep",
        "opts": {**SYSTEM_OPTS, **PARAM_OPTS, "omega": ("0", "gyroscopic parameter"),
                 "sweep": ("delta=1e-4:1e-1", "names=lo:hi[:n]; swept values are scale * base")},
    },
}

SCHEMA = {
    "mesh2d": "omega, re1..re4, im1..im4, label1..label4 (p+, n+, p-, n-), status",
    "trajectory": ("omega, re1..re4, im1..im4, label1..label4 (p+, n+, p-, n-), "
                   "asym_re1, asym_im1, asym_re2, asym_im2 (first-order pair near i*beta), status"),
    "stability-map": "<axis columns in order>, kind, max_re",
    "boundary-section": "delta, nu, branch (upper | lower); JSON adds topology and slopes",
    "string-mesh": ("omega, im_<n><sign> for n = 1..nmax, sign + then -; "
                    "node file: n, eps, m, dl, omega_star, lambda_star_im, omega_exact, lambda_exact"),
    "string-split": ("omega, re1, im1, re2, im2 (exact), asym_re1, asym_im1, asym_re2, asym_im2, "
                     "residual1, residual2, status"),
    "compare": ("scale, asym_re1, asym_im1, exact_re1, exact_im1, err1, asym_re2, asym_im2, "
                "exact_re2, exact_im2, err2, max_err; JSON adds exponent and fit_residual"),
}


def schema_text() -> str:
    lines = [f"schema_version {SCHEMA_VERSION}",
             "CSV values use 17 significant digits; JSON carries 'schema_version', "
             "'command', 'config', 'columns', 'rows' and command-specific fields."]
    for name, cols in SCHEMA.items():
        lines.append(f"{name}: {cols}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# commands


def _system(cfg) -> GyroSystem2D:
    beta = parse_float("beta", cfg["beta"])
    try:
        return GyroSystem2D(beta, parse_matrix(cfg["d"], "D"), parse_matrix(cfg["k"], "K"),
                            parse_matrix(cfg["g"], "G"), parse_matrix(cfg["n"], "N"))
    except InvalidSystem as exc:
        raise ConfigError(str(exc)) from None


def _params(cfg) -> dict[str, float]:
    return {k: parse_float(k, cfg[k]) for k in PARAM_OPTS}


def _tracked_spectrum(sys: GyroSystem2D, omegas, delta, kappa, nu):
    coeffs = char_coeffs(sys.beta, omegas * sys.omega_scale, delta, kappa, nu * sys.nu_scale,
                         sys.trD, sys.detD, sys.trK, sys.detK, sys.trKD)
    roots, _, conv = quartic_roots_batch(np.atleast_2d(coeffs))
    start = unperturbed_spectrum(sys.beta, float(omegas[0]) * sys.omega_scale).by_label()
    ref = np.array([start[lab] for lab in UNPERTURBED_LABELS])
    return continue_branches(roots, initial=ref), conv


def _spectrum_rows(omegas, tracked, conv, extra=None):
    rows = []
    for j, om in enumerate(omegas):
        r = tracked[j]
        row = [om, *r.real, *r.imag, *UNPERTURBED_LABELS]
        if extra is not None:
            row += extra[j]
        row.append("ok" if conv[j] else "nonconverged")
        rows.append(row)
    return rows


SPECTRUM_COLS = (["omega"] + [f"re{i}" for i in range(1, 5)] + [f"im{i}" for i in range(1, 5)]
                 + [f"label{i}" for i in range(1, 5)])


def cmd_mesh2d(cfg) -> Result:
    beta = parse_float("beta", cfg["beta"])
    if not beta > 0:
        raise ConfigError("beta must be positive")
    omegas = parse_range("omega", cfg["omega"])
    sys = GyroSystem2D(beta, np.eye(2), np.zeros((2, 2)))
    tracked, conv = _tracked_spectrum(sys, omegas, 0.0, 0.0, 0.0)
    return Result(Table(SPECTRUM_COLS + ["status"], _spectrum_rows(omegas, tracked, conv)),
                  converged=bool(conv.all()))


def cmd_trajectory(cfg) -> Result:
    sys = _system(cfg)
    p = _params(cfg)
    omegas = parse_range("omega", cfg["omega"])
    tracked, conv = _tracked_spectrum(sys, omegas, p["delta"], p["kappa"], p["nu"])
    pair = continue_branches(asymptotic_eigs_grid(sys, omegas, p["delta"], p["kappa"], p["nu"]))
    extra = [[pr[0].real, pr[0].imag, pr[1].real, pr[1].imag] for pr in pair]
    cols = SPECTRUM_COLS + ["asym_re1", "asym_im1", "asym_re2", "asym_im2", "status"]
    return Result(Table(cols, _spectrum_rows(omegas, tracked, conv, extra)), converged=bool(conv.all()))


def _parse_axes(text: str):
    axes = []
    for item in str(text).split(","):
        if "=" not in item:
            raise ConfigError(f"axes: expected name=lo:hi:n, got {item!r}")
        name, rng = item.split("=", 1)
        name = name.strip()
        parts = rng.split(":")
        if len(parts) != 3:
            raise ConfigError(f"axes: expected name=lo:hi:n, got {item!r}")
        axes.append((name, parse_float(name, parts[0]), parse_float(name, parts[1]),
                     parse_int(name, parts[2])))
    return tuple(axes)


def cmd_stability_map(cfg) -> Result:
    sys = _system(cfg)
    p = _params(cfg)
    fixed = ParamPoint(parse_float("omega", cfg["omega"]), p["delta"], p["kappa"], p["nu"])
    try:
        grid = atlas.GridSpec(_parse_axes(cfg["axes"]), fixed)
        smap = atlas.scan_map(sys, grid, cfg["provenance"], tol=parse_float("tol", cfg["tol"]),
                              cell_budget=parse_int("budget", cfg["budget"]))
    except atlas.GridTooLarge as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    names = [a[0] for a in grid.axes]
    mesh = grid.mesh()
    flat = {nm: mesh[nm].ravel() for nm in names}
    kinds = smap.kinds.ravel()
    max_re = smap.max_re.ravel()
    rows = [[*(flat[nm][i] for nm in names), KIND_FROM_CODE[int(kinds[i])].value, max_re[i]]
            for i in range(kinds.size)]
    meta = {"shape": list(grid.shape), "provenance": smap.provenance}
    return Result(Table(names + ["kind", "max_re"], rows), meta)


def cmd_boundary_section(cfg) -> Result:
    sys = _system(cfg)
    omega = parse_float("omega", cfg["omega"])
    samples = parse_int("samples", cfg["samples"])
    if samples < 16:
        raise ConfigError("samples must be at least 16")
    dmax = parse_float("delta_max", cfg["delta_max"]) if cfg["delta_max"] else None
    sec = atlas.boundary_section(sys, omega, samples, dmax)
    up, lo = sec.branches
    rows = [[d, v, "upper"] for d, v in up] + [[d, v, "lower"] for d, v in lo]
    meta = {"topology": sec.topology,
            "tangent_slopes": list(sec.tangent_slopes),
            "measured_slopes": [None if math.isnan(s) else s for s in sec.measured_slopes],
            "delta_extent": sec.delta_extent}
    return Result(Table(["delta", "nu", "branch"], rows), meta)


def cmd_string_mesh(cfg) -> Result:
    nmax = parse_int("nmax", cfg["nmax"])
    if nmax < 1:
        raise ConfigError("nmax must be at least 1")
    omegas = parse_range("omega", cfg["omega"])
    if np.any(np.abs(omegas) >= 1.0):
        raise ConfigError("omega: the string model needs |omega| < 1")
    labels = [(n, s) for n in range(1, nmax + 1) for s in (1, -1)]
    cols = ["omega"] + [f"im_{n}{'+' if s > 0 else '-'}" for n, s in labels]
    rows = [[om, *(n * (1.0 + s * om) for n, s in labels)] for om in omegas]
    lo, hi = float(omegas.min()), float(omegas.max())
    nodes = mesh_nodes(nmax, (lo, hi))
    node_rows = [[nd.n, nd.eps, nd.m, nd.dl, nd.omega_star, nd.lambda_star.imag,
                  str(nd.omega_frac), str(nd.lambda_frac)] for nd in nodes]
    node_table = Table(["n", "eps", "m", "dl", "omega_star", "lambda_star_im",
                        "omega_exact", "lambda_exact"], node_rows)
    return Result(Table(cols, rows), {"node_count": len(nodes)}, {"nodes": node_table})


def cmd_string_split(cfg) -> Result:
    n = parse_int("mode", cfg["mode"])
    if n < 1:
        raise ConfigError("mode must be at least 1")
    k, d, mu = (parse_float(nm, cfg[nm]) for nm in ("k", "d", "mu"))
    omegas = parse_range("omega", cfg["omega"])
    try:
        params = [StringParams(float(om), k, d, mu) for om in omegas]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    node = zero_speed_node(n)
    asym = continue_branches(np.array([node_split(node, p) for p in params]))
    rows, all_ok = [], True
    prev: list[np.ndarray] = []
    for j, p in enumerate(params):
        # extrapolate only from separated roots; near a double root the
        # first-order pair is the better seed and keeps Newton off the slope zero
        if len(prev) >= 2 and min(abs(prev[-1][0] - prev[-1][1]), abs(prev[-2][0] - prev[-2][1])) > 1e-6:
            seeds = 2 * prev[-1] - prev[-2]
        else:
            seeds = asym[j]
        roots, res, ok = exact_pair(p, seeds)
        if prev:
            roots = roots[list(best_assignment(prev[-1], roots))]
        else:
            roots = roots[list(best_assignment(asym[j], roots))]
        prev.append(roots)
        all_ok &= bool(ok.all())
        rows.append([p.omega, roots[0].real, roots[0].imag, roots[1].real, roots[1].imag,
                     asym[j][0].real, asym[j][0].imag, asym[j][1].real, asym[j][1].imag,
                     res[0], res[1], "ok" if ok.all() else "nonconverged"])
    cols = ["omega", "re1", "im1", "re2", "im2", "asym_re1", "asym_im1", "asym_re2", "asym_im2",
            "residual1", "residual2", "status"]
    return Result(Table(cols, rows), converged=all_ok)


def cmd_compare(cfg, given: set[str]) -> Result:
    sys = _system(cfg)
    base = _params(cfg)
    base["omega"] = parse_float("omega", cfg["omega"])
    names, scales = parse_sweep(cfg["sweep"])
    weights = {nm: (base[nm] if nm in given else 1.0) for nm in names}
    rows, errs, all_ok = [], [], True
    for s in scales:
        vals = dict(base)
        for nm in names:
            vals[nm] = s * weights[nm]
        p = ParamPoint(vals["omega"], vals["delta"], vals["kappa"], vals["nu"])
        asym = asymptotic_eigs_grid(sys, p.omega, p.delta, p.kappa, p.nu)
        coeffs = char_coeffs(sys.beta, p.omega * sys.omega_scale, p.delta, p.kappa, p.nu * sys.nu_scale,
                             sys.trD, sys.detD, sys.trK, sys.detK, sys.trKD)
        roots, _, conv = quartic_roots_batch(coeffs[None, :])
        all_ok &= bool(conv.all())
        roots = roots[0]
        near = roots[np.argsort(np.abs(roots - 1j * sys.beta), kind="stable")[:2]]
        near = near[list(best_assignment(asym, near))]
        e = np.abs(asym - near)
        errs.append(e.max())
        rows.append([s, asym[0].real, asym[0].imag, near[0].real, near[0].imag, e[0],
                     asym[1].real, asym[1].imag, near[1].real, near[1].imag, e[1], e.max()])
    exponent, resid = fit_order(scales, np.array(errs))
    cols = ["scale", "asym_re1", "asym_im1", "exact_re1", "exact_im1", "err1",
            "asym_re2", "asym_im2", "exact_re2", "exact_im2", "err2", "max_err"]
    meta = {"swept": names, "exponent": exponent, "fit_residual": resid}
    return Result(Table(cols, rows), meta, converged=all_ok)


def fit_order(scales, errors) -> tuple[float | None, float | None]:
    """Least-squares slope of ``log(error)`` against ``log(scale)`` and the RMS log residual."""
    scales = np.asarray(scales, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = errors > 0
    if keep.sum() < 2:
        return None, None
    x, y = np.log(scales[keep]), np.log(errors[keep])
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    return float(slope), resid


HANDLERS = {
    "mesh2d": cmd_mesh2d,
    "trajectory": cmd_trajectory,
    "stability-map": cmd_stability_map,
    "boundary-section": cmd_boundary_section,
    "string-mesh": cmd_string_mesh,
    "string-split": cmd_string_split,
    "compare": cmd_compare,
}


# --------------------------------------------------------------------------
# driver


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gyrospectra", description=__doc__.splitlines()[0])
    parser.add_argument("--schema", action="store_true", help="print the output schema and exit")
    sub = parser.add_subparsers(dest="command")
    for name, spec in COMMANDS.items():
        sp = sub.add_parser(name, help=spec["help"], description=spec["help"])
        sp.add_argument("--config", help="flat key = value file or a JSON output to re-run")
        sp.add_argument("--out", help="output path (default: standard output)")
        sp.add_argument("--format", choices=("csv", "json"), default=None)
        for opt, (default, helptext) in spec["opts"].items():
            sp.add_argument("--" + opt.replace("_", "-"), dest=opt, default=None,
                            help=f"{helptext} (default: {default or 'none'})")
    run = sub.add_parser("run", help="run the command named in a config file")
    run.add_argument("--config", required=True)
    sub.add_parser("schema", help="print the output schema")
    return parser


def resolve(command: str, args: argparse.Namespace) -> tuple[dict[str, str], set[str], str, str | None]:
    """Merge defaults, config file and flags; return (config, explicitly given keys, format, out)."""
    spec = COMMANDS[command]["opts"]
    file_cfg = load_config(args.config) if args.config else {}
    file_cmd = file_cfg.pop("command", command)
    if file_cmd != command:
        raise ConfigError(f"config is for command {file_cmd!r}, not {command!r}")
    fmt_ = file_cfg.pop("format", None)
    out = file_cfg.pop("out", None)
    unknown = sorted(set(file_cfg) - set(spec))
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    cfg, given = {}, set()
    for opt, (default, _) in spec.items():
        flag = getattr(args, opt)
        if flag is not None:
            cfg[opt], _ = flag, given.add(opt)
        elif opt in file_cfg:
            cfg[opt], _ = file_cfg[opt], given.add(opt)
        else:
            cfg[opt] = default
    fmt_ = args.format or fmt_ or "csv"
    if fmt_ not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt_!r}")
    return cfg, given, fmt_, args.out or out


def _json_text(command, cfg, given, result: Result) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": {"command": command, **{k: cfg[k] for k in sorted(given)}},
        "status": "ok" if result.converged else "nonconverged",
        **result.meta,
        "columns": result.table.columns,
        "rows": result.table.to_json_rows(),
    }
    for name, tab in result.extra.items():
        doc[name] = {"columns": tab.columns, "rows": tab.to_json_rows()}
    return json.dumps(doc, indent=1, allow_nan=True) + "\n"


def emit(command, cfg, given, fmt_, out, result: Result) -> None:
    if fmt_ == "json":
        text = _json_text(command, cfg, given, result)
        if out:
            write_atomic(out, text)
        else:
            sys.stdout.write(text)
        return
    text = result.table.to_csv()
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)
    for name, tab in result.extra.items():
        target = cfg.get(f"{name}_out") or (f"{os.path.splitext(out)[0]}.{name}.csv" if out else None)
        if target:
            write_atomic(target, tab.to_csv())
        else:
            sys.stdout.write("\n" + tab.to_csv())


_NEGATIVE_VALUE = re.compile(r"^-(\d|\.\d|inf)")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--opt -2:2:5`` into ``--opt=-2:2:5`` so argparse does not take the value for a flag."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if (a.startswith("--") and "=" not in a and i + 1 < len(argv)
                and _NEGATIVE_VALUE.match(argv[i + 1])):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        if argv and argv[0] == "run":
            pre = argparse.ArgumentParser(prog="gyrospectra run", add_help=False)
            pre.add_argument("--config", required=True)
            ns, _ = pre.parse_known_args(argv[1:])
            command = load_config(ns.config).get("command")
            if command not in COMMANDS:
                raise ConfigError(f"config names no runnable command (got {command!r})")
            argv = [command] + argv[1:]
        args = parser.parse_args(argv)
        if args.schema or args.command == "schema":
            sys.stdout.write(schema_text())
            return EXIT_OK
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_CONFIG
        cfg, given, fmt_, out = resolve(args.command, args)
        handler = HANDLERS[args.command]
        result = handler(cfg, given) if args.command == "compare" else handler(cfg)
        emit(args.command, cfg, given, fmt_, out, result)
    except ConfigError as exc:
        print(f"gyrospectra: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not result.converged:
        print("gyrospectra: some roots did not converge; see the status column", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
