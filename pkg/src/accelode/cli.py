"""Command line interface.

Commands: ``fit``, ``simulate``, ``mc``, ``report``.  Configuration is
a flat ``key = value`` text file with strict parsing; unknown keys are
rejected.  Machine-readable output is versioned JSON; human-readable
tables use 4 significant digits.

Exit codes: 0 success, 2 configuration or data error, 3 estimation
failure.
"""

import argparse
import dataclasses
import json
import sys
from typing import Optional

import numpy as np

from .accel import AccelConfig, EstimateReport, fit
from .errors import AccelodeError, ConfigError, StudyAborted
from .mc import (McSummary, PRESETS, ScenarioSpec, get_preset, run_study,
                 simulate_dataset)
from .models import catalog_get
from .nls import NlsConfig, nls_fit
from .ode_core import Dataset, ToleranceSpec

SCHEMA_VERSION = 1


# ------------------------------------------------------- config parsing

def _parse_kv_file(path):
    """Flat ``key = value`` lines; '#' starts a comment; duplicate keys
    are rejected."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _floats(value, key):
    try:
        return tuple(float(v) for v in value.split(","))
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated reals, "
                          f"got {value!r}") from None


def _float(value, key):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a real, got {value!r}") from None


def _int(value, key):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, "
                          f"got {value!r}") from None


def _bool(value, key):
    low = value.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _strings(value):
    return tuple(v.strip() for v in value.split(","))


_FIT_KEYS = ("model", "known_xi", "known_theta", "bandwidths",
             "bandwidth_constants", "degree", "level", "rtol", "atol",
             "max_steps", "eval_grid_size", "rescale_time",
             "include_interpolant")


def build_fit_config(cfg: dict, level: Optional[float] = None):
    """(model_name, AccelConfig) from a parsed config mapping."""
    unknown = sorted(set(cfg) - set(_FIT_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {}
    if "known_xi" in cfg:
        kwargs["known_xi"] = _floats(cfg["known_xi"], "known_xi")
    if "known_theta" in cfg:
        kwargs["known_theta"] = _floats(cfg["known_theta"], "known_theta")
    if "bandwidths" in cfg:
        kwargs["bandwidths"] = _floats(cfg["bandwidths"], "bandwidths")
    if "bandwidth_constants" in cfg:
        kwargs["bandwidth_constants"] = _floats(
            cfg["bandwidth_constants"], "bandwidth_constants")
    if "degree" in cfg:
        kwargs["degree"] = _int(cfg["degree"], "degree")
    if "eval_grid_size" in cfg:
        kwargs["eval_grid_size"] = _int(cfg["eval_grid_size"],
                                        "eval_grid_size")
    if "rescale_time" in cfg:
        kwargs["rescale_time"] = _bool(cfg["rescale_time"], "rescale_time")
    if "include_interpolant" in cfg:
        kwargs["include_interpolant"] = _bool(cfg["include_interpolant"],
                                              "include_interpolant")
    if level is not None:
        kwargs["level"] = level
    elif "level" in cfg:
        kwargs["level"] = _float(cfg["level"], "level")
    tol_kwargs = {}
    if "rtol" in cfg:
        tol_kwargs["rtol"] = _float(cfg["rtol"], "rtol")
    if "atol" in cfg:
        tol_kwargs["atol"] = _float(cfg["atol"], "atol")
    if "max_steps" in cfg:
        tol_kwargs["max_steps"] = _int(cfg["max_steps"], "max_steps")
    if tol_kwargs:
        kwargs["tol"] = ToleranceSpec(**tol_kwargs)
    try:
        return cfg.get("model"), AccelConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


_SCENARIO_KEYS = ("preset", "name", "model", "true_xi", "true_theta", "n",
                  "t_end", "design", "grid", "sigma", "replications",
                  "seed", "estimators", "known_xi", "level",
                  "bandwidth_constants", "include_interpolant",
                  "rtol", "atol")


def build_scenario(cfg: dict, seed: Optional[int] = None,
                   level: Optional[float] = None) -> ScenarioSpec:
    """A ScenarioSpec from a parsed config mapping.  With ``preset``
    present the remaining keys override preset fields."""
    unknown = sorted(set(cfg) - set(_SCENARIO_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {}
    if "name" in cfg:
        kwargs["name"] = cfg["name"]
    if "model" in cfg:
        kwargs["model"] = cfg["model"]
    if "true_xi" in cfg:
        kwargs["true_xi"] = _floats(cfg["true_xi"], "true_xi")
    if "true_theta" in cfg:
        kwargs["true_theta"] = _floats(cfg["true_theta"], "true_theta")
    if "n" in cfg:
        kwargs["n"] = _int(cfg["n"], "n")
    if "t_end" in cfg:
        kwargs["t_end"] = _float(cfg["t_end"], "t_end")
    if "design" in cfg:
        kwargs["design"] = cfg["design"]
    if "grid" in cfg:
        kwargs["grid"] = _floats(cfg["grid"], "grid")
    if "sigma" in cfg:
        kwargs["sigma"] = _floats(cfg["sigma"], "sigma")
    if "replications" in cfg:
        kwargs["replications"] = _int(cfg["replications"], "replications")
    if "seed" in cfg:
        kwargs["seed"] = _int(cfg["seed"], "seed")
    if "estimators" in cfg:
        kwargs["estimators"] = _strings(cfg["estimators"])
    if "known_xi" in cfg:
        kwargs["known_xi"] = _bool(cfg["known_xi"], "known_xi")
    if "include_interpolant" in cfg:
        kwargs["include_interpolant"] = _bool(cfg["include_interpolant"],
                                              "include_interpolant")
    if "level" in cfg:
        kwargs["level"] = _float(cfg["level"], "level")
    if "bandwidth_constants" in cfg:
        kwargs["bandwidth_constants"] = _floats(
            cfg["bandwidth_constants"], "bandwidth_constants")
    tol_kwargs = {}
    if "rtol" in cfg:
        tol_kwargs["rtol"] = _float(cfg["rtol"], "rtol")
    if "atol" in cfg:
        tol_kwargs["atol"] = _float(cfg["atol"], "atol")
    if tol_kwargs:
        kwargs["tol"] = ToleranceSpec(**tol_kwargs)
    if seed is not None:
        kwargs["seed"] = seed
    if level is not None:
        kwargs["level"] = level

    try:
        if "preset" in cfg:
            base = get_preset(cfg["preset"])
            return dataclasses.replace(base, **kwargs)
        missing = [k for k in ("name", "model", "true_xi", "true_theta",
                               "n", "t_end") if k not in kwargs]
        if missing:
            raise ConfigError("scenario config missing keys: "
                              + ", ".join(missing))
        return ScenarioSpec(**kwargs)
    except (ValueError, StudyAborted) as exc:
        raise ConfigError(str(exc)) from None


# ------------------------------------------------------------ data I/O

def read_data_file(path) -> Dataset:
    """CSV with header ``t,x1,...,xd`` and strictly increasing times."""
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise ConfigError(f"cannot read data file {path}: {exc}") from None
    if not lines:
        raise ConfigError(f"{path}: empty data file")
    header = [c.strip() for c in lines[0].split(",")]
    d = len(header) - 1
    if d < 1 or header[0] != "t" or \
            header[1:] != [f"x{i + 1}" for i in range(d)]:
        raise ConfigError(f"{path}: header must be 't,x1,...,xd', "
                          f"got {lines[0]!r}")
    times = []
    values = []
    for rowno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != d + 1:
            raise ConfigError(f"{path}: row {rowno}: expected {d + 1} "
                              f"cells, got {len(cells)}")
        try:
            row = [float(c) for c in cells]
        except ValueError:
            raise ConfigError(
                f"{path}: row {rowno}: non-numeric cell") from None
        if times and row[0] <= times[-1]:
            raise ConfigError(f"{path}: row {rowno}: time {row[0]:g} is "
                              f"not greater than previous {times[-1]:g}")
        times.append(row[0])
        values.append(row[1:])
    return Dataset(np.array(times), np.array(values).T)


def write_data_file(path, data: Dataset):
    d = data.dim_state
    header = "t," + ",".join(f"x{i + 1}" for i in range(d))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for j in range(data.n):
            cells = [repr(float(data.times[j]))]
            cells += [repr(float(v)) for v in data.values[:, j]]
            fh.write(",".join(cells) + "\n")


# ------------------------------------------------------------- reports

def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _param_names(d, p, mask):
    names = [f"xi_{i + 1}" for i in range(d)]
    names += [f"theta_{k + 1}" for k in range(p)]
    return [nm for nm, m in zip(names, mask) if m]


def report_to_json(report: EstimateReport, model_name: str) -> dict:
    eta = report.eta_est
    d = eta.xi.size
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "estimate_report",
        "model": model_name,
        "method": report.method,
        "param_names": _param_names(d, eta.theta.size, eta.estimate_mask),
        "xi": eta.xi,
        "theta": eta.theta,
        "estimate_mask": eta.estimate_mask,
        "point": report.point,
        "selected_bandwidth": report.selected_bandwidth,
        "rss": report.rss,
        "sigma2_hat": report.sigma2_hat,
        "level": report.level,
        "ci": report.ci,
        "asym_var": report.asym_var,
        "diagnostics": report.diagnostics,
    }
    if report.eta_prelim is not None:
        doc["xi_prelim"] = report.eta_prelim.xi
        doc["theta_prelim"] = report.eta_prelim.theta
    return _jsonable(doc)


def summary_to_json(summary: McSummary) -> dict:
    spec = dataclasses.asdict(summary.spec)
    spec["tol"] = dataclasses.asdict(summary.spec.tol)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "mc_summary",
        "scenario": spec,
        "param_names": summary.param_names,
        "truth": summary.truth,
        "estimators": {
            name: dataclasses.asdict(es)
            for name, es in summary.estimators.items()
        },
    }
    return _jsonable(doc)


def _fmt(x):
    if x is None:
        return "-"
    return f"{x:.4g}"


def _print_table(rows, out):
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        out.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
                  + "\n")


def print_estimate_report(doc, out=None):
    out = out if out is not None else sys.stdout
    out.write(f"model: {doc['model']}   method: {doc['method']}\n")
    if doc["method"] == "accel":
        out.write(f"selected bandwidth: {_fmt(doc['selected_bandwidth'])}\n")
    out.write(f"rss: {_fmt(doc['rss'])}   sigma2_hat: "
              f"{_fmt(doc['sigma2_hat'])}   level: {doc['level']:g}\n")
    rows = [["Parameter", "Point", "CI(L)", "CI(R)"]]
    ci = doc["ci"] if doc["ci"] is not None else [[None, None]] * len(
        doc["point"])
    for name, pt, (lo, hi) in zip(doc["param_names"], doc["point"], ci):
        rows.append([name, _fmt(pt), _fmt(lo), _fmt(hi)])
    _print_table(rows, out)


def print_mc_summary(doc, out=None):
    out = out if out is not None else sys.stdout
    sc = doc["scenario"]
    names = list(doc["estimators"])
    out.write(f"scenario: {sc['name']}   model: {sc['model']}   "
              f"n: {sc['n']}   replications: {sc['replications']}\n")
    for est in names:
        es = doc["estimators"][est]
        if es["n_failed"]:
            out.write(f"{est}: {es['n_failed']} failed replications "
                      f"excluded ({es['n_ok']} kept)\n")
    rows = [["Parameter", "True"]
            + [f"{e.upper()} {col}" for e in names
               for col in ("Mean", "Coverage")]]
    for j, name in enumerate(doc["param_names"]):
        row = [name, _fmt(doc["truth"][j])]
        for est in names:
            es = doc["estimators"][est]
            row += [_fmt(es["mean"][j]), _fmt(es["coverage"][j])]
        rows.append(row)
    _print_table(rows, out)
    out.write("\n")
    rows = [["Parameter"]
            + [f"{e.upper()} {col}" for e in names
               for col in ("STE", "ASYM")]]
    for j, name in enumerate(doc["param_names"]):
        row = [name]
        for est in names:
            es = doc["estimators"][est]
            row += [_fmt(es["ste"][j]), _fmt(es["asym"][j])]
        rows.append(row)
    _print_table(rows, out)


def _write_json(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ------------------------------------------------------------ commands

def cmd_fit(args):
    cfg = _parse_kv_file(args.config) if args.config else {}
    model_name, config = build_fit_config(cfg, level=args.level)
    if args.model:
        model_name = args.model
    if not model_name:
        raise ConfigError("no model given (use --model or 'model =' "
                          "in the config)")
    if not args.data:
        raise ConfigError("fit requires --data")
    entry = catalog_get(model_name)
    data = read_data_file(args.data)
    if data.dim_state != entry.model.dim_state:
        raise ConfigError(
            f"data has {data.dim_state} state columns but model "
            f"{model_name!r} has dimension {entry.model.dim_state}")
    if args.estimator == "nls":
        report = nls_fit(entry.model, data,
                         NlsConfig(level=config.level, tol=config.tol),
                         pipeline=config)
    else:
        report = fit(entry.model, data, config)
    doc = report_to_json(report, model_name)
    print_estimate_report(doc)
    if args.out:
        _write_json(doc, args.out)
    return 0


def cmd_simulate(args):
    if not args.config:
        raise ConfigError("simulate requires --config")
    if not args.out:
        raise ConfigError("simulate requires --out")
    spec = build_scenario(_parse_kv_file(args.config), seed=args.seed)
    data = simulate_dataset(spec, replicate_index=0)
    write_data_file(args.out, data)
    print(f"wrote {data.n} observations of {spec.model} to {args.out}")
    return 0


def cmd_mc(args):
    if not args.config:
        raise ConfigError("mc requires --config")
    spec = build_scenario(_parse_kv_file(args.config), seed=args.seed,
                          level=args.level)
    summary = run_study(spec, jobs=args.jobs)
    doc = summary_to_json(summary)
    print_mc_summary(doc)
    if args.out:
        _write_json(doc, args.out)
    return 0


def cmd_report(args):
    if not args.data:
        raise ConfigError("report requires --data (a JSON report file)")
    try:
        with open(args.data) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.data}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.data}: invalid JSON: {exc}") from None
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{args.data}: unsupported schema_version "
                          f"{version!r} (expected {SCHEMA_VERSION})")
    kind = doc.get("kind")
    if kind == "estimate_report":
        print_estimate_report(doc)
    elif kind == "mc_summary":
        print_mc_summary(doc)
    else:
        raise ConfigError(f"{args.data}: unknown report kind {kind!r}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="accelode",
        description="One-step accelerated least squares estimation "
                    "for ODE models.")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "fit": (cmd_fit, "estimate parameters from a data file"),
        "simulate": (cmd_simulate, "generate one synthetic dataset"),
        "mc": (cmd_mc, "run a Monte Carlo study"),
        "report": (cmd_report, "render a saved JSON report"),
    }
    for name, (func, help_text) in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--model", help="model name from the catalog")
        p.add_argument("--config", help="path to a key = value config file")
        p.add_argument("--data", help="input data or report file")
        p.add_argument("--out", help="output file path")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for mc")
        p.add_argument("--level", type=float,
                       help="confidence level (default 0.95)")
        if name == "fit":
            p.add_argument("--estimator", choices=("accel", "nls"),
                           default="accel")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return 2
    except StudyAborted as exc:
        print(f"error [study]: {exc}", file=sys.stderr)
        return 3
    except AccelodeError as exc:
        print(f"error [estimation]: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
