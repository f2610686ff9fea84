"""Configuration, snapshot output and the command-line interface.

Configs are plain TOML with [model], [params], [mesh], [time], [fields],
[output] and [solver] sections; formula values are quoted strings. Only
model.id, time.t_end and the four field formulas are required, every
other key has a documented default and the loader records which keys
were defaulted. Snapshots go to legacy-ASCII VTK unstructured grids or
to CSV with header x,y,u,v,w; floats are written with repr so a re-read
is exact and repeated runs are byte-identical. Every simulation also
writes diagnostics.csv, the fully resolved config and a manifest.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__, expr, stepper
from ._kernels import BACKEND
from .dynamics import FieldState, Params
from .equilibria import compute_equilibria, scan_table1
from .fem import mms_study
from .mesh import TriMesh
from .stepper import RunResult, run

__all__ = [
    "ConfigError",
    "SimConfig",
    "load_config",
    "loads_config",
    "dump_config",
    "list_presets",
    "load_preset",
    "write_snapshot",
    "read_snapshot_csv",
    "validate_vtk",
    "write_run_outputs",
    "main",
]

ENV_OUTDIR = "IGPSIM_OUTDIR"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    model_id: int
    params: Params
    nx: int
    ny: int
    rect: tuple[float, float, float, float]
    dt: float
    t_end: float
    snapshots: tuple[float, ...]
    expr_k: str
    expr_u0: str
    expr_v0: str
    expr_w0: str
    outdir: str
    format: str
    solver_tol: float
    solver_max_iter: int
    scheme: str
    diag_stride: int
    defaulted: tuple[str, ...] = field(default=(), compare=False)


_PARAM_KEYS = (
    "alpha", "a", "b", "c", "d", "beta", "gamma", "mu", "nu",
    "d0", "d1", "d2", "e1", "e2", "q",
)

_PARAM_DEFAULTS = {
    "alpha": 5.0, "a": 2.0, "b": 5.0, "c": 0.1, "d": 2.0,
    "beta": 1.0, "gamma": 1.0, "mu": 0.05, "nu": 0.05,
    "d0": 0.1, "d1": 1.0, "d2": 1.0, "e1": 1.0, "e2": 1.0, "q": 0.1,
}

# section -> key -> (kind, default); REQUIRED means no default.
_REQUIRED = object()
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "model": {"id": ("int", _REQUIRED)},
    "params": {k: ("float", _PARAM_DEFAULTS[k]) for k in _PARAM_KEYS},
    "mesh": {
        "nx": ("int", 32),
        "ny": ("int", 32),
        "rect": ("floatlist4", (-1.0, 1.0, -1.0, 1.0)),
    },
    "time": {
        "dt": ("float", 1e-3),
        "t_end": ("float", _REQUIRED),
        "snapshots": ("floatlist", ()),
    },
    "fields": {
        "K": ("str", _REQUIRED),
        "u0": ("str", _REQUIRED),
        "v0": ("str", _REQUIRED),
        "w0": ("str", _REQUIRED),
    },
    "output": {"directory": ("str", "out"), "format": ("str", "csv")},
    "solver": {
        "tol": ("float", 1e-10),
        "max_iter": ("int", 0),
        "scheme": ("str", "rk2"),
        "diag_stride": ("int", 1),
    },
}


def _coerce(section: str, key: str, kind: str, value):
    where = f"{section}.{key}"
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return int(value)
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        val = float(value)
        if not math.isfinite(val):
            raise ConfigError(f"{where} must be finite, got {value!r}")
        return val
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    if kind in ("floatlist", "floatlist4"):
        if not isinstance(value, list) or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in value
        ):
            raise ConfigError(f"{where} must be a list of numbers, got {value!r}")
        vals = tuple(float(v) for v in value)
        if kind == "floatlist4" and len(vals) != 4:
            raise ConfigError(f"{where} must have exactly 4 entries, got {len(vals)}")
        if any(not math.isfinite(v) for v in vals):
            raise ConfigError(f"{where} entries must be finite")
        return vals
    raise AssertionError(kind)


def loads_config(text: str, source: str = "<string>") -> SimConfig:
    """Parse config text; see load_config."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{source}: invalid TOML: {err}") from None

    for sec in raw:
        if sec not in _SCHEMA:
            raise ConfigError(f"{source}: unknown section [{sec}]")
        if not isinstance(raw[sec], dict):
            raise ConfigError(f"{source}: [{sec}] must be a section")
        for key in raw[sec]:
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"{source}: unknown key {sec}.{key}")

    missing = [
        f"{sec}.{key}"
        for sec, keys in _SCHEMA.items()
        for key, (_, default) in keys.items()
        if default is _REQUIRED and key not in raw.get(sec, {})
    ]
    if missing:
        raise ConfigError(f"{source}: missing required keys: {', '.join(missing)}")

    resolved: dict[str, dict[str, object]] = {}
    defaulted: list[str] = []
    for sec, keys in _SCHEMA.items():
        resolved[sec] = {}
        for key, (kind, default) in keys.items():
            if key in raw.get(sec, {}):
                resolved[sec][key] = _coerce(sec, key, kind, raw[sec][key])
            else:
                resolved[sec][key] = default
                defaulted.append(f"{sec}.{key}")

    model_id = resolved["model"]["id"]
    try:
        params = Params(
            model_id=model_id, **{k: resolved["params"][k] for k in _PARAM_KEYS}
        )
    except ValueError as err:
        raise ConfigError(f"{source}: {err}") from None

    for key in ("K", "u0", "v0", "w0"):
        try:
            expr.parse(resolved["fields"][key])
        except expr.ExprSyntaxError as err:
            raise ConfigError(f"{source}: fields.{key}: {err}") from None

    x0, x1, y0, y1 = resolved["mesh"]["rect"]
    if not (x1 > x0 and y1 > y0):
        raise ConfigError(f"{source}: mesh.rect is degenerate: {resolved['mesh']['rect']}")
    if resolved["mesh"]["nx"] < 1 or resolved["mesh"]["ny"] < 1:
        raise ConfigError(f"{source}: mesh.nx and mesh.ny must be >= 1")
    if resolved["output"]["format"] not in ("csv", "vtk"):
        raise ConfigError(
            f"{source}: output.format must be 'csv' or 'vtk', "
            f"got {resolved['output']['format']!r}"
        )
    if resolved["solver"]["scheme"] not in ("rk2", "euler"):
        raise ConfigError(
            f"{source}: solver.scheme must be 'rk2' or 'euler', "
            f"got {resolved['solver']['scheme']!r}"
        )
    if resolved["solver"]["tol"] <= 0.0:
        raise ConfigError(f"{source}: solver.tol must be positive")
    if resolved["solver"]["max_iter"] < 0:
        raise ConfigError(f"{source}: solver.max_iter must be >= 0 (0 means 10n)")
    if resolved["solver"]["diag_stride"] < 1:
        raise ConfigError(f"{source}: solver.diag_stride must be >= 1")
    if resolved["time"]["dt"] <= 0.0 or resolved["time"]["t_end"] < 0.0:
        raise ConfigError(f"{source}: time.dt must be > 0 and time.t_end >= 0")

    cfg = SimConfig(
        model_id=model_id,
        params=params,
        nx=resolved["mesh"]["nx"],
        ny=resolved["mesh"]["ny"],
        rect=resolved["mesh"]["rect"],
        dt=resolved["time"]["dt"],
        t_end=resolved["time"]["t_end"],
        snapshots=resolved["time"]["snapshots"],
        expr_k=resolved["fields"]["K"],
        expr_u0=resolved["fields"]["u0"],
        expr_v0=resolved["fields"]["v0"],
        expr_w0=resolved["fields"]["w0"],
        outdir=resolved["output"]["directory"],
        format=resolved["output"]["format"],
        solver_tol=resolved["solver"]["tol"],
        solver_max_iter=resolved["solver"]["max_iter"],
        scheme=resolved["solver"]["scheme"],
        diag_stride=resolved["solver"]["diag_stride"],
        defaulted=tuple(defaulted),
    )
    # Cross-field checks that need the full picture.
    try:
        stepper.TimeGrid(cfg.dt, cfg.t_end, cfg.snapshots)
    except ValueError as err:
        raise ConfigError(f"{source}: {err}") from None
    return cfg


def load_config(path: str) -> SimConfig:
    """Load and validate a TOML config file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path!r}: {err}") from None
    return loads_config(text, source=path)


def _toml_str(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _toml_val(kind: str, value) -> str:
    if kind == "int":
        return str(value)
    if kind == "float":
        return repr(float(value))
    if kind == "str":
        return _toml_str(value)
    return "[" + ", ".join(repr(float(v)) for v in value) + "]"


def dump_config(cfg: SimConfig) -> str:
    """Serialize the resolved config; load of the dump compares equal."""
    values = {
        "model": {"id": cfg.model_id},
        "params": {k: getattr(cfg.params, k) for k in _PARAM_KEYS},
        "mesh": {"nx": cfg.nx, "ny": cfg.ny, "rect": cfg.rect},
        "time": {"dt": cfg.dt, "t_end": cfg.t_end, "snapshots": cfg.snapshots},
        "fields": {
            "K": cfg.expr_k, "u0": cfg.expr_u0, "v0": cfg.expr_v0, "w0": cfg.expr_w0,
        },
        "output": {"directory": cfg.outdir, "format": cfg.format},
        "solver": {
            "tol": cfg.solver_tol,
            "max_iter": cfg.solver_max_iter,
            "scheme": cfg.scheme,
            "diag_stride": cfg.diag_stride,
        },
    }
    lines = []
    for sec, keys in _SCHEMA.items():
        lines.append(f"[{sec}]")
        for key, (kind, _) in keys.items():
            lines.append(f"{key} = {_toml_val(kind, values[sec][key])}")
        lines.append("")
    return "\n".join(lines)


def _preset_dir():
    from importlib import resources

    return resources.files("igpsim.presets")


def list_presets() -> tuple[str, ...]:
    names = [
        entry.name[: -len(".toml")]
        for entry in _preset_dir().iterdir()
        if entry.name.endswith(".toml")
    ]
    return tuple(sorted(names))


def load_preset(name: str) -> SimConfig:
    entry = _preset_dir() / f"{name}.toml"
    try:
        text = entry.read_text(encoding="utf-8")
    except (FileNotFoundError, OSError):
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(list_presets())}"
        ) from None
    return loads_config(text, source=f"preset:{name}")


def _resolve_config_arg(arg: str) -> SimConfig:
    if os.path.exists(arg):
        return load_config(arg)
    if "/" not in arg and "\\" not in arg and not arg.endswith(".toml"):
        return load_preset(arg)
    raise ConfigError(f"config file {arg!r} does not exist")


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    os.replace(tmp, path)


def write_snapshot(state: FieldState, mesh: TriMesh, path: str, fmt: str) -> None:
    """Write one snapshot atomically (temp file + rename)."""
    if fmt == "vtk":
        text = _vtk_text(state, mesh)
    elif fmt == "csv":
        text = _csv_text(state, mesh)
    else:
        raise ValueError(f"unknown snapshot format {fmt!r}")
    _atomic_write(path, text)


def _vtk_text(state: FieldState, mesh: TriMesh) -> str:
    n = mesh.n_nodes
    ne = mesh.n_elements
    parts = [
        "# vtk DataFile Version 2.0\n",
        f"igpsim fields t={state.t!r}\n",
        "ASCII\n",
        "DATASET UNSTRUCTURED_GRID\n",
        f"POINTS {n} double\n",
    ]
    xs = mesh.nodes[:, 0].tolist()
    ys = mesh.nodes[:, 1].tolist()
    for i in range(n):
        parts.append(f"{xs[i]!r} {ys[i]!r} 0.0\n")
    parts.append(f"CELLS {ne} {4 * ne}\n")
    tri = mesh.elements
    for e in range(ne):
        parts.append(f"3 {tri[e, 0]} {tri[e, 1]} {tri[e, 2]}\n")
    parts.append(f"CELL_TYPES {ne}\n")
    parts.extend("5\n" * ne)
    parts.append(f"POINT_DATA {n}\n")
    for name, vals in (("u", state.u), ("v", state.v), ("w", state.w)):
        parts.append(f"SCALARS {name} double 1\n")
        parts.append("LOOKUP_TABLE default\n")
        for val in vals.tolist():
            parts.append(f"{val!r}\n")
    return "".join(parts)


def _csv_text(state: FieldState, mesh: TriMesh) -> str:
    rows = ["x,y,u,v,w\n"]
    cols = (
        mesh.nodes[:, 0].tolist(),
        mesh.nodes[:, 1].tolist(),
        state.u.tolist(),
        state.v.tolist(),
        state.w.tolist(),
    )
    for x, y, u, v, w in zip(*cols):
        rows.append(f"{x!r},{y!r},{u!r},{v!r},{w!r}\n")
    return "".join(rows)


def read_snapshot_csv(path: str):
    """Read a CSV snapshot back; values are exact (repr round trip)."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != "x,y,u,v,w":
            raise ValueError(f"{path}: bad CSV header {header!r}")
        cols = ([], [], [], [], [])
        for lineno, line in enumerate(f, start=2):
            parts = line.strip().split(",")
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 columns")
            for c, pstr in zip(cols, parts):
                c.append(float(pstr))
    return tuple(np.asarray(c) for c in cols)


def validate_vtk(path: str) -> dict:
    """Structural check of a legacy-ASCII VTK unstructured grid snapshot.

    Verifies header, counts, triangle cell types, index ranges and that
    the three point scalars u, v, w are present with finite values.
    Raises ValueError on the first violation; returns a summary dict.
    """
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()

    def fail(msg):
        raise ValueError(f"{path}: {msg}")

    if len(lines) < 6:
        fail("truncated file")
    if not lines[0].startswith("# vtk DataFile Version"):
        fail(f"bad header line {lines[0]!r}")
    if lines[2].strip() != "ASCII":
        fail("not an ASCII file")
    if lines[3].strip() != "DATASET UNSTRUCTURED_GRID":
        fail("not an unstructured grid")
    toks = lines[4].split()
    if len(toks) != 3 or toks[0] != "POINTS" or toks[2] != "double":
        fail(f"bad POINTS line {lines[4]!r}")
    n = int(toks[1])
    pos = 5
    for i in range(n):
        parts = lines[pos + i].split()
        if len(parts) != 3:
            fail(f"point {i}: expected 3 coordinates")
        if not all(math.isfinite(float(v)) for v in parts):
            fail(f"point {i}: non-finite coordinate")
    pos += n
    toks = lines[pos].split()
    if len(toks) != 3 or toks[0] != "CELLS":
        fail(f"bad CELLS line {lines[pos]!r}")
    ne, sz = int(toks[1]), int(toks[2])
    if sz != 4 * ne:
        fail(f"CELLS size {sz} != 4 * {ne}")
    pos += 1
    for e in range(ne):
        parts = lines[pos + e].split()
        if len(parts) != 4 or parts[0] != "3":
            fail(f"cell {e}: expected '3 i j k'")
        idx = [int(v) for v in parts[1:]]
        if any(i < 0 or i >= n for i in idx):
            fail(f"cell {e}: vertex index out of range")
        if len(set(idx)) != 3:
            fail(f"cell {e}: repeated vertex")
    pos += ne
    if lines[pos].split() != ["CELL_TYPES", str(ne)]:
        fail(f"bad CELL_TYPES line {lines[pos]!r}")
    pos += 1
    for e in range(ne):
        if lines[pos + e].strip() != "5":
            fail(f"cell {e}: type is not triangle (5)")
    pos += ne
    if lines[pos].split() != ["POINT_DATA", str(n)]:
        fail(f"bad POINT_DATA line {lines[pos]!r}")
    pos += 1
    seen = []
    for _ in range(3):
        toks = lines[pos].split()
        # component count is optional in the legacy format; require 1 if given
        if (
            len(toks) not in (3, 4)
            or toks[0] != "SCALARS"
            or toks[2] != "double"
            or (len(toks) == 4 and toks[3] != "1")
        ):
            fail(f"bad SCALARS line {lines[pos]!r}")
        name = toks[1]
        if lines[pos + 1].strip() != "LOOKUP_TABLE default":
            fail(f"missing LOOKUP_TABLE for scalar {name}")
        pos += 2
        for i in range(n):
            if not math.isfinite(float(lines[pos + i])):
                fail(f"scalar {name}[{i}] is non-finite")
        pos += n
        seen.append(name)
    if seen != ["u", "v", "w"]:
        fail(f"expected scalars u, v, w in order, got {seen}")
    return {"points": n, "cells": ne, "scalars": tuple(seen)}


def _diagnostics_text(records) -> str:
    rows = [
        "t,total_biomass,min_u,min_v,min_w,linf_u,linf_v,linf_w,bound_k0,bound_ok\n"
    ]
    for r in records:
        rows.append(
            f"{r.t!r},{r.total_biomass!r},{r.min_u!r},{r.min_v!r},{r.min_w!r},"
            f"{r.linf_u!r},{r.linf_v!r},{r.linf_w!r},{r.bound_k0!r},"
            f"{int(r.bound_ok)}\n"
        )
    return "".join(rows)


def _manifest_text(cfg: SimConfig, result: RunResult | None) -> str:
    lines = [
        "[run]",
        f'package = "igpsim"',
        f"version = {_toml_str(__version__)}",
        f"backend = {_toml_str(BACKEND)}",
        'config = "config.resolved.toml"',
        "",
        "[thresholds]",
        f"solver_tol = {cfg.solver_tol!r}",
        f"bound_slack = {stepper.BOUND_SLACK!r}",
        "",
        "[provenance]",
        "defaulted = ["
        + ", ".join(_toml_str(k) for k in cfg.defaulted)
        + "]",
    ]
    if result is not None:
        lines += [
            "",
            "[outputs]",
            f"n_snapshots = {len(result.snapshots)}",
            f"n_diagnostics = {len(result.diagnostics)}",
        ]
    return "\n".join(lines) + "\n"


def write_run_outputs(result: RunResult, outdir: str) -> list[str]:
    """Snapshots, diagnostics.csv, resolved config and manifest for one run."""
    cfg = result.config
    os.makedirs(outdir, exist_ok=True)
    written = []
    for snap in result.snapshots:
        name = f"snap_t{snap.t:g}.{cfg.format}"
        path = os.path.join(outdir, name)
        write_snapshot(snap, result.mesh, path, cfg.format)
        written.append(path)
    diag_path = os.path.join(outdir, "diagnostics.csv")
    _atomic_write(diag_path, _diagnostics_text(result.diagnostics))
    written.append(diag_path)
    cfg_path = os.path.join(outdir, "config.resolved.toml")
    _atomic_write(cfg_path, dump_config(cfg))
    written.append(cfg_path)
    man_path = os.path.join(outdir, "manifest.toml")
    _atomic_write(man_path, _manifest_text(cfg, result))
    written.append(man_path)
    return written


def _parse_k_grid(text: str) -> list[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"bad K grid {text!r}; use start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 2 or stop <= start:
            raise ConfigError(f"bad K grid {text!r}; need stop > start, count >= 2")
        return list(np.linspace(start, stop, count))
    return [float(v) for v in text.split(",")]


def _fmt_complex(z: complex) -> str:
    if z.imag == 0.0:
        return f"{z.real:.6g}"
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real:.6g}{sign}{abs(z.imag):.6g}i"


def _cmd_simulate(args) -> int:
    cfg = _resolve_config_arg(args.config)
    outdir = args.out or os.environ.get(ENV_OUTDIR) or cfg.outdir
    for note in cfg.params.survivability_notes():
        print(f"note: {note}")
    progress = None
    if args.progress:
        def progress(step, total):
            print(f"step {step}/{total}", flush=True)
    result = run(cfg, progress=progress)
    written = write_run_outputs(result, outdir)
    last = result.diagnostics[-1]
    print(f"backend: {BACKEND}")
    print(
        f"finished t={result.final_state.t:g}: biomass={last.total_biomass:.6g}, "
        f"min(u,v,w)=({last.min_u:.3g}, {last.min_v:.3g}, {last.min_w:.3g})"
    )
    bound_all = all(r.bound_ok for r in result.diagnostics)
    print(f"biomass bound K0={last.bound_k0:.6g}: {'ok' if bound_all else 'VIOLATED'}")
    print(f"wrote {len(written)} files to {outdir}")
    return 0


def _cmd_equilibria(args) -> int:
    cfg = _resolve_config_arg(args.config)
    for k in _parse_k_grid(args.K):
        print(f"K = {k!r}")
        for pt in compute_equilibria(cfg.params, k):
            eig = (
                " eig=[" + ", ".join(_fmt_complex(z) for z in pt.eigenvalues) + "]"
                if pt.eigenvalues is not None
                else ""
            )
            print(
                f"  {pt.label}: u={pt.u:.12g} v={pt.v:.12g} w={pt.w:.12g} "
                f"exists={'yes' if pt.exists else 'no'} "
                f"class={pt.classification}{eig}"
            )
    return 0


def _cmd_table1(args) -> int:
    cfg = _resolve_config_arg(args.config)
    if args.kmax <= args.kmin or args.num < 2:
        raise ConfigError("need kmax > kmin and num >= 2")
    grid = np.linspace(args.kmin, args.kmax, args.num)
    res = scan_table1(cfg.params, grid)
    for th in res.thresholds:
        print(f"threshold {th.label} {th.kind} K={th.k_value:.8f}")
    rows = ["K,label,u,v,w,exists,max_re_lambda,classification\n"]
    for k, pts in zip(res.k_values, res.rows):
        for pt in pts:
            rows.append(
                f"{k!r},{pt.label},{pt.u!r},{pt.v!r},{pt.w!r},"
                f"{int(pt.exists)},{pt.max_real_part!r},{pt.classification}\n"
            )
    if args.out:
        _atomic_write(args.out, "".join(rows))
        print(f"wrote {args.out}")
    else:
        sys.stdout.write("".join(rows))
    return 0


def _cmd_mms(args) -> int:
    records = mms_study(levels=args.levels, nx0=args.nx0)
    print("nx      h        L2_error     order")
    for rec in records:
        order = f"{rec['order']:.3f}" if rec["order"] is not None else "-"
        print(f"{rec['nx']:<7d} {rec['h']:<8.5f} {rec['l2_error']:<12.5e} {order}")
    return 0


def _cmd_ode(args) -> int:
    cfg = _resolve_config_arg(args.config)
    if args.u0 is not None:
        y0 = (args.u0, args.v0, args.w0)
        if None in y0:
            raise ConfigError("--u0, --v0, --w0 must be given together")
    else:
        # Uniform comparison state: nodal means of the configured fields.
        from .mesh import build_rect_mesh

        m = build_rect_mesh(cfg.nx, cfg.ny, cfg.rect)
        x, y = m.nodes[:, 0], m.nodes[:, 1]
        y0 = tuple(
            float(np.mean(expr.sample(expr.parse(e), x, y)))
            for e in (cfg.expr_u0, cfg.expr_v0, cfg.expr_w0)
        )
    times, states = stepper.integrate_uniform_ode(
        cfg.params, args.K, y0, args.dt, args.t_end, record_every=args.record_every
    )
    if args.out:
        rows = ["t,u,v,w\n"]
        for t, triple in zip(np.asarray(times).tolist(), states):
            u, v, w = np.asarray(triple).tolist()
            rows.append(f"{t!r},{u!r},{v!r},{w!r}\n")
        _atomic_write(args.out, "".join(rows))
        print(f"wrote {args.out}")
    u, v, w = states[-1]
    print(f"K={args.K:g} start=({y0[0]:.6g}, {y0[1]:.6g}, {y0[2]:.6g})")
    print(f"t={times[-1]:g}: u={u:.8g} v={v:.8g} w={w:.8g}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="igpsim",
        description=(
            "Finite-element simulation and equilibrium analysis of a "
            "three-species food web with predator taxis. CONFIG arguments "
            "accept a TOML path or a bundled preset name "
            "(see 'igpsim presets')."
        ),
    )
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a configured simulation")
    s.add_argument("config")
    s.add_argument("--out", help=f"output directory (overrides ${ENV_OUTDIR} and config)")
    s.add_argument("--progress", action="store_true", help="print step progress")
    s.set_defaults(fn=_cmd_simulate)

    s = sub.add_parser("equilibria", help="closed-form equilibria and stability")
    s.add_argument("config")
    s.add_argument("--K", required=True, help="value, comma list, or start:stop:count")
    s.set_defaults(fn=_cmd_equilibria)

    s = sub.add_parser("table1", help="scan K for existence/stability thresholds")
    s.add_argument("config")
    s.add_argument("--kmin", type=float, default=0.01)
    s.add_argument("--kmax", type=float, default=2.05)
    s.add_argument("--num", type=int, default=120)
    s.add_argument("--out", help="write the per-K table to this CSV file")
    s.set_defaults(fn=_cmd_table1)

    s = sub.add_parser("mms", help="manufactured-solution convergence study")
    s.add_argument("--levels", type=int, default=3)
    s.add_argument("--nx0", type=int, default=16)
    s.set_defaults(fn=_cmd_mms)

    s = sub.add_parser("ode", help="uniform-state kinetics at constant K")
    s.add_argument("config")
    s.add_argument("--K", type=float, required=True)
    s.add_argument("--t-end", dest="t_end", type=float, default=200.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--u0", type=float)
    s.add_argument("--v0", type=float)
    s.add_argument("--w0", type=float)
    s.add_argument("--record-every", type=int, default=1000)
    s.add_argument("--out", help="write the trajectory to this CSV file")
    s.set_defaults(fn=_cmd_ode)

    s = sub.add_parser("presets", help="list bundled scenario presets")
    s.set_defaults(fn=lambda args: (print("\n".join(list_presets())), 0)[1])

    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
