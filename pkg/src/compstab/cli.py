"""Command-line driver: single roots, direct spectra, eigenfunctions and sweeps."""

import argparse
import csv
import io
import itertools
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import jsonschema
import numpy as np
import yaml

from .core import Params, make_poiseuille, validate_profile
from .dispersion import find_root, loglog_slope, predicted_root
from .errors import CompstabError, ConfigError, IllConditioned, ParameterError
from .spectral import cheb_grid, direct_spectrum

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
COMMANDS = ("root", "eig", "sweep", "modes", "validate")
SWEEP_KEYS = ("eps", "mach", "lambda", "t0")
DEFAULTS = {"eps": 1e-5, "mach": 0.3, "lambda": 0.0, "t0": 10.0, "grid_n": None, "tol": 1e-8,
            "out": None, "format": "csv", "window_center": None, "window_radius": None,
            "workers": 1}

_scalar_or_list = {
    "oneOf": [
        {"type": "number"},
        {"type": "string"},
        {"type": "array", "items": {"type": "number"}, "minItems": 1},
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        **{k: _scalar_or_list for k in SWEEP_KEYS},
        "grid_n": {"type": ["integer", "null"], "minimum": 4},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "out": {"type": ["string", "null"]},
        "format": {"enum": ["csv", "json"]},
        "window_center": {"oneOf": [{"type": "string"}, {"type": "number"}, {"type": "null"},
                                    {"type": "array", "items": {"type": "number"},
                                     "minItems": 2, "maxItems": 2}]},
        "window_radius": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: _scalar_or_list for k in SWEEP_KEYS},
        },
    },
}

RECORD_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "additionalProperties": {"type": ["number", "string", "boolean", "integer", "null"]},
    },
}


class RunConfig:
    """Resolved run configuration; list-valued entries define a sweep."""

    def __init__(self, command, values):
        self.command = command
        self.values = values

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError as exc:
            raise AttributeError(name) from exc

    def tuples(self):
        lists = [self.values[k] for k in SWEEP_KEYS]
        return [dict(zip(SWEEP_KEYS, t)) for t in itertools.product(*lists)]


def parse_list(spec):
    """Number, list, comma-separated string or log-spaced ``start:stop:count``."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return [float(spec)]
    if isinstance(spec, (list, tuple)):
        return [float(x) for x in spec]
    s = str(spec).strip()
    if not s:
        return []
    if ":" in s:
        parts = s.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range {s!r} must be start:stop:count")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        if a <= 0 or b <= 0 or n < 1:
            raise ConfigError(f"log-spaced range {s!r} needs positive bounds and count")
        return [float(x) for x in np.logspace(math.log10(a), math.log10(b), n)]
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse list {s!r}") from exc


def parse_complex(v):
    if v is None:
        return None
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    try:
        return complex(str(v).replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex number {v!r}") from exc


def _coerce_numbers(v):
    # YAML 1.1 reads exponent forms without a dot (1e-9) as strings
    if isinstance(v, dict):
        return {k: _coerce_numbers(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_coerce_numbers(x) for x in v]
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return v
    return v


def load_config(path):
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    data = _coerce_numbers(data)
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config: {exc.message}") from exc
    return data


def build_config(command, args):
    """Merge defaults, the config file (if any) and explicit CLI flags."""
    vals = dict(DEFAULTS)
    if getattr(args, "config", None):
        data = load_config(args.config)
        sweep = data.pop("sweep", {}) or {}
        data.pop("command", None)
        vals.update(data)
        vals.update(sweep)
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            vals[key] = v
    for key in SWEEP_KEYS:
        vals[key] = parse_list(vals[key])
        if not vals[key]:
            raise ConfigError(f"sweep list for {key} is empty")
    for v in vals["eps"] + vals["t0"]:
        if v <= 0:
            raise ConfigError("sweep values of eps and t0 must be positive")
    vals["window_center"] = parse_complex(vals["window_center"])
    if vals["format"] not in ("csv", "json"):
        raise ConfigError(f"unknown format {vals['format']!r}")
    cfg = RunConfig(command, vals)
    for t in cfg.tuples():
        make_params(t)
    return cfg


def make_params(t):
    return Params(float(t["eps"]), float(t["mach"]), float(t["lambda"]), float(t["t0"]))


def _grid_for(params, grid_n):
    return cheb_grid(int(grid_n) if grid_n else params.default_grid_n())


def _cx(rec, name, z):
    rec["re_" + name] = float(np.real(z))
    rec["im_" + name] = float(np.imag(z))


def _base_record(t, params):
    return {"eps": params.eps, "mach": params.mach, "lambda": params.lam, "t0": params.t0,
            "k": params.k}


def _root_task(args):
    t, grid_n, tol = args
    params = make_params(t)
    grid = _grid_for(params, grid_n)
    flow = make_poiseuille(grid)
    rec = _base_record(t, params)
    rec["grid_n"] = grid.N
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllConditioned)
        try:
            r = find_root(params, flow, grid, tol=tol)
        except CompstabError as exc:
            res = getattr(exc, "result", None)
            c0 = predicted_root(params, flow).c0
            _cx(rec, "c_star", complex("nan+nanj"))
            _cx(rec, "c0", c0)
            rec.update(winding=res.winding if res is not None else None, residual=None,
                       growth_rate=None, in_disk=False, status=type(exc).__name__)
            return rec
    _cx(rec, "c_star", r.c_star)
    _cx(rec, "c0", r.c0)
    rec.update(winding=r.winding, residual=r.residual, growth_rate=r.growth_rate,
               in_disk=r.in_disk, status="ok")
    return rec


def _run_pool(func, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        # map preserves input order
        return list(ex.map(func, jobs))


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _json_safe(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render(records, fmt):
    """Records as CSV text (header plus rows) or a JSON array of flat objects."""
    if fmt == "json":
        data = [{k: _json_safe(v) for k, v in r.items()} for r in records]
        return json.dumps(data, indent=1) + "\n"
    keys = []
    for r in records:
        for k in r:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for r in records:
        w.writerow([_fmt(r.get(k)) for k in keys])
    return buf.getvalue()


def validate_records(text):
    """Parse JSON output and check it against the record schema."""
    data = json.loads(text)
    jsonschema.validate(data, RECORD_SCHEMA)
    return data


def _emit(cfg, records):
    text = render(records, cfg.format)
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_root(cfg):
    jobs = [(t, cfg.grid_n, cfg.tol) for t in cfg.tuples()]
    records = _run_pool(_root_task, jobs, cfg.workers)
    _emit(cfg, records)
    return EXIT_OK if all(r["status"] == "ok" for r in records) else EXIT_NUMERIC


def sweep_slopes(records):
    """Log-log slopes of Im c* and k Im c* against eps per (mach, lambda, t0) group."""
    out = []
    key = lambda r: (r["mach"], r["lambda"], r["t0"])  # noqa: E731
    for grp, rows in itertools.groupby(sorted(records, key=key), key=key):
        rows = [r for r in rows if r["status"] == "ok" and r["im_c_star"] > 0]
        if len({r["eps"] for r in rows}) < 3:
            continue
        eps = [r["eps"] for r in rows]
        s1, h1 = loglog_slope(eps, [r["im_c_star"] for r in rows])
        s2, h2 = loglog_slope(eps, [r["growth_rate"] for r in rows])
        out.append({"mach": grp[0], "lambda": grp[1], "t0": grp[2], "points": len(rows),
                    "slope_im_c": s1, "halfwidth_im_c": h1,
                    "slope_growth": s2, "halfwidth_growth": h2})
    return out


def cmd_sweep(cfg):
    jobs = [(t, cfg.grid_n, cfg.tol) for t in cfg.tuples()]
    records = _run_pool(_root_task, jobs, cfg.workers)
    _emit(cfg, records)
    slopes = sweep_slopes(records)
    if slopes:
        sys.stderr.write(render(slopes, "csv"))
    else:
        sys.stderr.write("no slope fit: fewer than three converged roots in every group\n")
    return EXIT_OK if all(r["status"] == "ok" for r in records) else EXIT_NUMERIC


def _window(cfg, params, flow):
    pr = predicted_root(params, flow)
    center = cfg.window_center if cfg.window_center is not None else pr.c0
    radius = cfg.window_radius if cfg.window_radius is not None else 0.5 * abs(center)
    return center, radius


def _spectrum(cfg, t):
    params = make_params(t)
    grid = _grid_for(params, cfg.grid_n)
    flow = make_poiseuille(grid)
    center, radius = _window(cfg, params, flow)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllConditioned)
        spec = direct_spectrum(params, flow, grid, center, radius)
    return params, grid, spec


def cmd_eig(cfg):
    records = []
    try:
        for t in cfg.tuples():
            params, grid, spec = _spectrum(cfg, t)
            for i, (c, ok) in enumerate(zip(spec.eigenvalues, spec.resolution_flags)):
                rec = _base_record(t, params)
                rec["grid_n"] = grid.N
                rec["index"] = i
                _cx(rec, "c", c)
                rec["physical"] = bool(ok)
                rec["growth_rate"] = float(params.k * c.imag)
                records.append(rec)
    except CompstabError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        if records:
            _emit(cfg, records)
        return EXIT_NUMERIC
    _emit(cfg, records)
    return EXIT_OK


def normalized_mode(mode):
    """Scale so that max |u| = 1 with u real and positive at the maximum."""
    j = int(np.argmax(np.abs(mode.u)))
    return mode.scaled(1.0 / mode.u[j])


def cmd_modes(cfg):
    tuples = cfg.tuples()
    if len(tuples) != 1:
        raise ConfigError("modes takes a single parameter tuple")
    try:
        params, grid, spec = _spectrum(cfg, tuples[0])
    except CompstabError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC
    phys = np.nonzero(spec.resolution_flags)[0]
    i = int(phys[np.argmax(spec.eigenvalues[phys].imag)])
    mode = normalized_mode(spec.eigenvectors[i])
    c = spec.eigenvalues[i]
    records = []
    for j in np.argsort(mode.y):
        rec = {"y": float(mode.y[j])}
        _cx(rec, "c", c)
        for name in ("rho", "u", "v"):
            _cx(rec, name, getattr(mode, name)[j])
        records.append(rec)
    _emit(cfg, records)
    return EXIT_OK


def cmd_validate(cfg):
    records = []
    ok = True
    for t in cfg.tuples():
        params = make_params(t)
        grid = _grid_for(params, cfg.grid_n)
        flow = make_poiseuille(grid)
        rep = validate_profile(flow)
        pr = predicted_root(params, flow)
        for name, (passed, msg) in rep.checks.items():
            rec = _base_record(t, params)
            rec.update(check=name, passed=bool(passed), detail=msg)
            records.append(rec)
        rec = _base_record(t, params)
        rec.update(check="tau_beta", passed=True, detail=f"tau={pr.tau:.17g} beta={pr.beta:.17g}")
        records.append(rec)
        ok = ok and rep.passed
    _emit(cfg, records)
    return EXIT_OK if ok else EXIT_CONFIG


HANDLERS = {"root": cmd_root, "eig": cmd_eig, "sweep": cmd_sweep, "modes": cmd_modes,
            "validate": cmd_validate}


def build_parser():
    p = argparse.ArgumentParser(prog="compstab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML config file; flags override its values")
        for key in SWEEP_KEYS:
            s.add_argument("--" + key, dest=key, default=None,
                           help="value, comma list or start:stop:count (log-spaced)")
        s.add_argument("--grid-n", dest="grid_n", type=int, default=None)
        s.add_argument("--tol", type=float, default=None)
        s.add_argument("--out", default=None)
        s.add_argument("--format", choices=("csv", "json"), default=None)
        s.add_argument("--window-center", dest="window_center", default=None)
        s.add_argument("--window-radius", dest="window_radius", type=float, default=None)
        s.add_argument("--workers", type=int, default=None)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args.command, args)
        return HANDLERS[args.command](cfg)
    except (ConfigError, ParameterError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
