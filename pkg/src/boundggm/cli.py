"""Command-line front end.

    boundggm scan --config run.json
    boundggm ggm --state psi.txt [--renormalize] [--per-partition]

Exit codes: 0 success, 2 bad config or input, 3 solver failure, 4 I/O failure.
Errors are reported on stderr as one JSON object.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (ModelDescriptor, calibrate_noise_floor, make_grid, mg_point_detector,
                       scan_ggm, second_derivative, zero_crossings)
from .eigensolve import POLICIES, SolverOptions
from .errors import BoundGGMError, FeatureNotFoundError, IndeterminateReportError
from .ggm import ggm
from .hilbert import full_state
from .models import CHAIN, SQUARE, LatticeSpec, ModelParams

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4
SCHEMA = "boundggm-series/1"
SERIES_COLUMNS = ["mu", "energy", "gap", "ggm", "d2_ggm", "bound_ggm", "argmax_mask", "block_L",
                  "degenerate", "endpoint_flag"]


class ConfigError(ValueError):
    pass


class InputError(ValueError):
    pass


_NUM = (int, float)
# key -> (accepted types, default); None default means "model dependent"
CONFIG_KEYS = {
    "model": (str, None),
    "n_sites": (int, None),
    "rows": (int, None),
    "cols": (int, None),
    "boundary": (str, "periodic"),
    "j1": (_NUM, 1.0),
    "j2": (_NUM, 0.0),
    "gamma": (_NUM, 1.0),
    "lambda": (_NUM, 0.0),
    "sweep_mu": (str, None),
    "sweep_lo": (_NUM, None),
    "sweep_hi": (_NUM, None),
    "sweep_step": (_NUM, None),
    "exclude_center": (_NUM, None),
    "exclude_halfwidth": (_NUM, None),
    "k": (int, 2),
    "max_iter": (int, 300),
    "tol": (_NUM, 1e-10),
    "method": (str, "auto"),
    "degeneracy_tol": (_NUM, 1e-8),
    "policy": (str, "momentum"),
    "l_max": (int, 8),
    "n_quad": (int, 4096),
    "noise_floor": ((int, float, str), "auto"),
    "output_dir": (str, "results"),
    "formats": (list, ["csv", "json"]),
    "seed": (int, 1234),
    "threads": (int, 1),
}

SWEEP_DEFAULTS = {
    "xy_thermo": ("lambda", 0.2, 2.0, 0.005, 1.0, 0.01),
    "xy_finite": ("lambda", 0.2, 2.0, 0.005, 1.0, 0.01),
    "j1j2_chain": ("alpha", 0.0, 1.0, 0.01, None, None),
    "j1j2_square": ("alpha", 0.0, 1.0, 0.01, None, None),
}


def load_config(source):
    """Parse and validate a flat JSON run configuration (unknown keys rejected)."""
    if isinstance(source, dict):
        raw = dict(source)
    else:
        try:
            raw = json.loads(Path(source).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a flat JSON object")
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key, value in raw.items():
        types = CONFIG_KEYS[key][0]
        if isinstance(value, bool) or not isinstance(value, types):
            raise ConfigError(f"config key {key!r} has the wrong type")
    cfg = {k: raw.get(k, default) for k, (_, default) in CONFIG_KEYS.items()}

    model = cfg["model"]
    if model not in SWEEP_DEFAULTS:
        raise ConfigError(f"model must be one of {sorted(SWEEP_DEFAULTS)}")
    mu, lo, hi, step, ec, ew = SWEEP_DEFAULTS[model]
    for key, val in (("sweep_mu", mu), ("sweep_lo", lo), ("sweep_hi", hi), ("sweep_step", step),
                     ("exclude_center", ec), ("exclude_halfwidth", ew)):
        if cfg[key] is None:
            cfg[key] = val
    if not cfg["sweep_step"] > 0:
        raise ConfigError("sweep_step must be positive")
    if cfg["sweep_hi"] <= cfg["sweep_lo"]:
        raise ConfigError("sweep_hi must exceed sweep_lo")
    if cfg["sweep_mu"] not in ("alpha", "lambda", "gamma"):
        raise ConfigError("sweep_mu must be alpha, lambda or gamma")
    if (cfg["exclude_center"] is None) != (cfg["exclude_halfwidth"] is None):
        raise ConfigError("exclude_center and exclude_halfwidth go together")
    if cfg["boundary"] not in ("periodic", "open"):
        raise ConfigError("boundary must be periodic or open")
    if cfg["policy"] not in POLICIES:
        raise ConfigError(f"policy must be one of {POLICIES}")
    if cfg["method"] not in ("auto", "dense", "lanczos"):
        raise ConfigError("method must be auto, dense or lanczos")
    if isinstance(cfg["noise_floor"], str) and cfg["noise_floor"] != "auto":
        raise ConfigError("noise_floor must be a number or 'auto'")
    if not cfg["formats"] or any(f not in ("csv", "json") for f in cfg["formats"]):
        raise ConfigError("formats must be a non-empty subset of [csv, json]")
    if cfg["threads"] < 1 or cfg["k"] < 2:
        raise ConfigError("threads must be >= 1 and k >= 2")
    if model in ("j1j2_chain", "xy_finite") and cfg["n_sites"] is None:
        raise ConfigError(f"{model} needs n_sites")
    if model == "j1j2_square" and (cfg["rows"] is None or cfg["cols"] is None):
        raise ConfigError("j1j2_square needs rows and cols")
    if model == "j1j2_chain" and (cfg["n_sites"] < 4 or cfg["n_sites"] % 2):
        raise ConfigError("j1j2_chain needs an even n_sites >= 4")
    if model == "xy_finite" and cfg["n_sites"] < 2:
        raise ConfigError("xy_finite needs n_sites >= 2")
    if model == "j1j2_square" and (min(cfg["rows"], cfg["cols"]) < 2 or cfg["rows"] * cfg["cols"] > 24):
        raise ConfigError("j1j2_square needs rows, cols >= 2 and at most 24 sites")
    if model in ("j1j2_chain", "xy_finite") and cfg["n_sites"] > 24:
        raise ConfigError("at most 24 sites")
    if model == "xy_thermo" and cfg["sweep_mu"] == "alpha":
        raise ConfigError("xy_thermo scans lambda or gamma")
    if model.startswith("j1j2") and cfg["sweep_mu"] != "alpha":
        raise ConfigError("J1-J2 models scan alpha")
    try:
        descriptor(cfg)
        grid(cfg)
    except (BoundGGMError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def descriptor(cfg):
    model = cfg["model"]
    params = ModelParams(j1=float(cfg["j1"]), j2=float(cfg["j2"]), gamma=float(cfg["gamma"]),
                         lam=float(cfg["lambda"]))
    lattice = None
    if model in ("j1j2_chain", "xy_finite"):
        lattice = LatticeSpec(CHAIN, (cfg["n_sites"],), cfg["boundary"])
    elif model == "j1j2_square":
        lattice = LatticeSpec(SQUARE, (cfg["rows"], cfg["cols"]), cfg["boundary"])
    return ModelDescriptor(model, lattice, params, cfg["sweep_mu"])


def grid(cfg):
    exclude = None
    if cfg["exclude_center"] is not None:
        exclude = (cfg["exclude_center"], cfg["exclude_halfwidth"])
    return make_grid(cfg["sweep_lo"], cfg["sweep_hi"], cfg["sweep_step"], exclude)


def solver_options(cfg):
    return SolverOptions(k=cfg["k"], max_iter=cfg["max_iter"], tol=cfg["tol"], method=cfg["method"],
                         degeneracy_tol=cfg["degeneracy_tol"], seed=cfg["seed"])


def _fmt(x):
    return "nan" if not math.isfinite(x) else f"{x:.17g}"


def series_csv(series, model_kind):
    cols = [c for c in SERIES_COLUMNS if c != "block_L" or model_kind == "xy_thermo"]
    buf = io.StringIO()
    buf.write(f"# {SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for i in range(len(series)):
        row = {
            "mu": _fmt(series.mu[i]), "energy": _fmt(series.energy[i]), "gap": _fmt(series.gap[i]),
            "ggm": _fmt(series.ggm[i]), "d2_ggm": _fmt(series.d2[i]), "bound_ggm": _fmt(series.bound[i]),
            "argmax_mask": str(int(series.argmax_mask[i])), "block_L": str(int(series.block_L[i])),
            "degenerate": str(int(series.degenerate[i])), "endpoint_flag": str(int(series.endpoint_flag[i])),
        }
        w.writerow([row[c] for c in cols])
    return buf.getvalue()


def _atomic_write(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_scan(cfg):
    """Scan, differentiate and classify; returns (series, report dict)."""
    t0 = time.perf_counter()
    model, mu = descriptor(cfg), grid(cfg)
    opts = solver_options(cfg)
    kw = dict(L_max=cfg["l_max"], n_quad=cfg["n_quad"])
    series = second_derivative(scan_ggm(model, mu, opts, cfg["policy"], workers=cfg["threads"], **kw))
    floor = cfg["noise_floor"]
    if floor == "auto":
        floor = calibrate_noise_floor(model, float(mu[0]), opts, cfg["policy"], spacing=series.spacing, **kw)
    report = {"schema": SCHEMA, "version": __version__, "config": cfg, "n_points": len(series)}
    try:
        report.update(zero_crossings(series, float(floor)).to_dict())
    except IndeterminateReportError as exc:
        report.update({"noise_floor": float(floor), "crossings": [], "segments": [], "indeterminate": str(exc)})
    if model.kind == "j1j2_chain" and series.mu[0] <= 0.4 and series.mu[-1] >= 0.6:
        try:
            report["mg_feature"] = asdict(mg_point_detector(series))
        except FeatureNotFoundError as exc:
            report["mg_feature"] = {"error": str(exc)}
    if cfg["exclude_center"] is not None:
        c, w = cfg["exclude_center"], cfg["exclude_halfwidth"]
        report["excluded_band"] = {"center": c, "halfwidth": w,
                                   "note": "dE/dmu diverges at the critical point; band left out of the grid"}
    report["degenerate_points"] = [float(m) for m in series.mu[series.degenerate]]
    report["solver_iterations"] = series.iterations
    report["wall_clock_s"] = time.perf_counter() - t0
    return series, report


def _fail(code, kind, message):
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def cmd_scan(args):
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        return _fail(EXIT_IO, "io", str(exc))
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    if args.threads is not None:
        cfg["threads"] = args.threads
    if args.seed is not None:
        cfg["seed"] = args.seed
    try:
        series, report = run_scan(cfg)
    except BoundGGMError as exc:
        return _fail(EXIT_SOLVER, type(exc).__name__, str(exc))
    try:
        out = Path(cfg["output_dir"])
        out.mkdir(parents=True, exist_ok=True)
        if "csv" in cfg["formats"]:
            _atomic_write(out / "series.csv", series_csv(series, cfg["model"]))
        if "json" in cfg["formats"]:
            _atomic_write(out / "report.json", json.dumps(report, indent=2) + "\n")
        _atomic_write(out / "config.echo.json", json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        return _fail(EXIT_IO, "io", str(exc))
    print(f"wrote {len(series)} points to {out}")
    return EXIT_OK


def read_state_file(path):
    """Plain-text state: ``n_sites`` then ``index real imag`` for every label in order."""
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 1:
        raise InputError("first line must hold n_sites")
    try:
        n = int(lines[0][0])
    except ValueError as exc:
        raise InputError("n_sites must be an integer") from exc
    if not 2 <= n <= 24:
        raise InputError("n_sites must lie in [2, 24]")
    body = lines[1:]
    if len(body) != 1 << n:
        raise InputError(f"expected {1 << n} amplitude lines, found {len(body)}")
    amps = np.empty(1 << n, dtype=np.complex128)
    for expect, parts in enumerate(body):
        if len(parts) != 3:
            raise InputError(f"line {expect + 2}: expected 'index real imag'")
        try:
            idx, re, im = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise InputError(f"line {expect + 2}: {exc}") from exc
        if idx != expect:
            raise InputError(f"line {expect + 2}: labels must ascend from 0 (got {idx})")
        amps[idx] = complex(re, im)
    return full_state(n, amps)


def write_state_file(path, state):
    lines = [str(state.n_sites)]
    lines += [f"{i} {a.real:.17g} {a.imag:.17g}" for i, a in enumerate(state.amplitudes)]
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_ggm(args):
    try:
        state = read_state_file(args.state)
    except OSError as exc:
        return _fail(EXIT_IO, "io", str(exc))
    except InputError as exc:
        return _fail(EXIT_CONFIG, "input", str(exc))
    norm = state.norm()
    if norm == 0 or (abs(norm - 1) > 1e-6 and not args.renormalize):
        return _fail(EXIT_CONFIG, "normalization", f"state norm {norm:.12g} deviates from 1 (use --renormalize)")
    res = ggm(state.normalize(), keep_per_partition=args.per_partition)
    sites_a = res.argmax_mask.sites
    sites_b = res.argmax_mask.complement_sites
    print(f"ggm: {res.value:.15g}")
    print(f"lambda_max_sq: {res.lambda_max_sq:.15g}")
    print(f"argmax_partition: {' '.join(map(str, sites_a))} | {' '.join(map(str, sites_b))}")
    if not res.genuinely_entangled:
        print("status: not genuinely multiparty entangled")
    else:
        print("status: genuinely multiparty entangled")
    if args.per_partition:
        print()
        res.write_csv(sys.stdout)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="boundggm", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--threads", type=int, default=None, help="worker processes for scans")
    p.add_argument("--seed", type=int, default=None, help="Lanczos start-vector seed")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("scan", help="parameter scan of GGM and bound GGM")
    s.add_argument("--config", required=True, help="flat JSON run configuration")
    s.set_defaults(func=cmd_scan)
    g = sub.add_parser("ggm", help="GGM of a state stored as text")
    g.add_argument("--state", required=True)
    g.add_argument("--renormalize", action="store_true")
    g.add_argument("--per-partition", action="store_true")
    g.set_defaults(func=cmd_ggm)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
