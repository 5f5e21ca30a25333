"""Batch front-end: parse a run configuration, dispatch the experiment, emit
CSV results plus a JSON run manifest.

Config files are plain key = value lines grouped into the sections [model],
[charge], [sim], [experiment], [output].  Parsing is strict: unknown sections
or keys, duplicate keys, and malformed values are all hard errors carrying the
offending line number.  Full-line comments start with '#' or ';'.

    [model]
    n_spins = 3
    fock_cutoff = auto      # resolved from the charge settings

    [charge]
    mode = thermal
    n_b = 2.0

    [sim]
    dt = auto
    t_max = auto

    [experiment]
    kind = dynamics

    [output]
    prefix = charge_n3

Numeric CSV cells are written with 12 significant digits and rerunning the
same config with the same flags reproduces the files byte for byte.  Undefined
cells (efficiency below the floor, power at t = 0) are left empty.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .lindblad import EvolutionConfig, default_time_step
from .model import ChargeSpec, ModelSpec, suggest_fock_cutoff
from .spectrum import ground_crossings, order_parameter_scan, scan_spectrum
from .experiments import (
    charging_time_scan,
    disorder_ensemble,
    run_dynamics,
    steady_horizon,
    sweep_hopping,
    sweep_spin_number,
)

__all__ = ["ConfigError", "RunConfig", "parse_config", "run", "main"]

CSV_FMT = "%.12g"

_SECTIONS = ("model", "charge", "sim", "experiment", "output")

_REQUIRED = object()

# key -> (type tag, default); _REQUIRED marks keys that must be present,
# a None default on the auto_ and experiment keys means "not given"
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "model": {
        "n_spins": ("int", _REQUIRED),
        "omega_a": ("float", 1.0),
        "omega_c": ("float", 1.0),
        "g": ("float", 1.0),
        "kappa": ("float", 1.0),
        "j_hop": ("float", 0.0),
        "fock_cutoff": ("auto_int", None),
        "disorder": ("float_list", ()),
    },
    "charge": {
        "mode": ("choice:none,coherent,thermal", "none"),
        "f": ("float", 0.0),
        "delta": ("float", 0.0),
        "n_b": ("float", 0.0),
    },
    "sim": {
        "dt": ("auto_float", None),
        "t_max": ("auto_float", None),
        "sample_stride": ("int", 10),
        "steady_tol": ("float", 1e-7),
        "guard_tol": ("float", 1e-6),
    },
    "experiment": {
        "kind": (
            "choice:dynamics,sweep_n,sweep_j,disorder,tau_scan,spectrum",
            _REQUIRED,
        ),
        "n_values": ("int_list", None),
        "j_values": ("float_list", None),
        "j_min": ("float", None),
        "j_max": ("float", None),
        "points": ("int", None),
        "w": ("float", None),
        "realizations": ("int", None),
        "grid": ("int", 401),
        "locate_crossings": ("bool", True),
    },
    "output": {
        "prefix": ("str", "run"),
    },
}

# keys each experiment kind may use beyond "kind" itself
_KIND_KEYS: dict[str, set[str]] = {
    "dynamics": set(),
    "sweep_n": {"n_values"},
    "sweep_j": {"j_values", "j_min", "j_max", "points", "locate_crossings"},
    "disorder": {"w", "realizations"},
    "tau_scan": {"j_values", "j_min", "j_max", "points"},
    "spectrum": {"j_min", "j_max", "points", "grid"},
}


class ConfigError(ValueError):
    """Config file rejected; the message carries the offending line."""


@dataclass
class RunConfig:
    """A fully validated run: resolved model, integration controls, experiment."""

    spec: ModelSpec
    dt: float | None
    t_max: float | None  # None = auto, resolved per experiment at dispatch
    sample_stride: int
    steady_tol: float
    guard_tol: float
    experiment: str
    params: dict
    prefix: str
    raw: dict = field(default_factory=dict)
    defaults_applied: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def _convert(tag: str, text: str, where: str):
    if tag == "str":
        return text
    if tag == "int":
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {text!r}") from None
    if tag == "float":
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {text!r}") from None
    if tag == "bool":
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"{where}: expected true/false, got {text!r}")
    if tag.startswith("auto_"):
        if text.lower() == "auto":
            return None
        return _convert(tag[5:], text, where)
    if tag.startswith("choice:"):
        options = tag[7:].split(",")
        if text not in options:
            raise ConfigError(
                f"{where}: expected one of {', '.join(options)}, got {text!r}"
            )
        return text
    if tag.endswith("_list"):
        items = [p.strip() for p in text.split(",") if p.strip()]
        if not items:
            raise ConfigError(f"{where}: expected a comma-separated list")
        return tuple(_convert(tag[:-5], p, where) for p in items)
    raise AssertionError(f"unhandled schema tag {tag}")


def _read_lines(path: str) -> list[tuple[int, str]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    out = []
    for ln, line in enumerate(raw, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        out.append((ln, stripped))
    return out


def parse_config(path: str) -> RunConfig:
    """Parse and validate a config file into a RunConfig.

    All defaults are materialized here and recorded in defaults_applied so the
    run log and manifest can echo them.
    """
    entries: dict[str, dict[str, tuple[object, int]]] = {s: {} for s in _SECTIONS}
    seen: set[str] = set()
    section: str | None = None
    for ln, line in _read_lines(path):
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {ln}: malformed section header {line!r}")
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ConfigError(f"line {ln}: unknown section [{name}]")
            if name in seen:
                raise ConfigError(f"line {ln}: duplicate section [{name}]")
            seen.add(name)
            section = name
            continue
        if section is None:
            raise ConfigError(f"line {ln}: key outside any section: {line!r}")
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        schema = _SCHEMA[section]
        if key not in schema:
            raise ConfigError(f"line {ln}: unknown key {section}.{key}")
        if key in entries[section]:
            raise ConfigError(f"line {ln}: duplicate key {section}.{key}")
        tag = schema[key][0]
        entries[section][key] = (
            _convert(tag, value, f"line {ln} ({section}.{key})"),
            ln,
        )

    resolved: dict[str, dict[str, object]] = {}
    defaults_applied: list[str] = []
    for sec in _SECTIONS:
        resolved[sec] = {}
        for key, (tag, default) in _SCHEMA[sec].items():
            if key in entries[sec]:
                resolved[sec][key] = entries[sec][key][0]
            elif default is _REQUIRED:
                resolved[sec][key] = None  # presence enforced during validation
            else:
                resolved[sec][key] = default
                if sec != "experiment":
                    defaults_applied.append(
                        f"{sec}.{key} = {_plain(tag, default)}"
                    )

    return _materialize(resolved, entries, defaults_applied)


def _plain(tag: str, value) -> str:
    if value is None:
        return "auto" if tag.startswith("auto_") else "(none)"
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value) if value else "(none)"
    return str(value)


def _materialize(
    resolved: dict,
    entries: dict,
    defaults_applied: list[str],
) -> RunConfig:
    model = resolved["model"]
    charge = resolved["charge"]
    sim = resolved["sim"]
    exp = resolved["experiment"]
    output = resolved["output"]

    if model["n_spins"] is None:
        raise ConfigError("model.n_spins is required")
    if exp["kind"] is None:
        raise ConfigError("experiment.kind is required")
    kind = exp["kind"]

    allowed = _KIND_KEYS[kind] | {"kind"}
    for key, (_, ln) in entries["experiment"].items():
        if key not in allowed:
            raise ConfigError(
                f"line {ln}: key experiment.{key} is not used by kind {kind}"
            )

    if model["kappa"] < 0:
        ln = entries["model"].get("kappa", (None, "?"))[1]
        raise ConfigError(f"line {ln}: model.kappa must be nonnegative")

    caught: list[str] = []
    with warnings.catch_warnings(record=True) as grabbed:
        warnings.simplefilter("always")
        try:
            charge_spec = ChargeSpec(
                mode=charge["mode"],
                f=charge["f"],
                delta=charge["delta"],
                n_b=charge["n_b"],
            )
        except ValueError as exc:
            raise ConfigError(f"[charge]: {exc}") from None
        cutoff = model["fock_cutoff"]
        if cutoff is None:
            try:
                cutoff = suggest_fock_cutoff(
                    charge_spec,
                    model["kappa"],
                    n_spins=model["n_spins"],
                    guard_tol=sim["guard_tol"],
                )
            except ValueError as exc:
                raise ConfigError(f"[model]: fock_cutoff = auto: {exc}") from None
            defaults_applied.append(f"model.fock_cutoff = {cutoff} (auto)")
        try:
            spec = ModelSpec(
                n_spins=model["n_spins"],
                omega_a=model["omega_a"],
                omega_c=model["omega_c"],
                g=model["g"],
                j_hop=model["j_hop"],
                kappa=model["kappa"],
                charge=charge_spec,
                disorder=model["disorder"],
                fock_cutoff=cutoff,
            )
        except ValueError as exc:
            raise ConfigError(f"[model]: {exc}") from None
    caught.extend(str(w.message) for w in grabbed)

    params = _experiment_params(kind, exp, entries["experiment"])

    if sim["sample_stride"] < 1:
        raise ConfigError("sim.sample_stride must be >= 1")
    if sim["dt"] is not None and sim["dt"] <= 0:
        raise ConfigError("sim.dt must be positive")
    if sim["t_max"] is not None and sim["t_max"] <= 0:
        raise ConfigError("sim.t_max must be positive")

    return RunConfig(
        spec=spec,
        dt=sim["dt"],
        t_max=sim["t_max"],
        sample_stride=sim["sample_stride"],
        steady_tol=sim["steady_tol"],
        guard_tol=sim["guard_tol"],
        experiment=kind,
        params=params,
        prefix=output["prefix"],
        raw=resolved,
        defaults_applied=defaults_applied,
        warnings=caught,
    )


def _experiment_params(kind: str, exp: dict, raw_entries: dict) -> dict:
    def has(key):
        return exp[key] is not None

    if kind == "dynamics":
        return {}
    if kind == "sweep_n":
        if not has("n_values"):
            raise ConfigError("experiment.n_values is required for kind sweep_n")
        if any(n < 1 for n in exp["n_values"]):
            raise ConfigError("experiment.n_values must all be >= 1")
        return {"n_values": list(exp["n_values"])}
    if kind in ("sweep_j", "tau_scan"):
        listed = has("j_values")
        ranged = has("j_min") or has("j_max") or has("points")
        if listed and ranged:
            raise ConfigError(
                "experiment: give either j_values or j_min/j_max/points, not both"
            )
        if listed:
            js = [float(j) for j in exp["j_values"]]
        elif has("j_min") and has("j_max") and has("points"):
            if exp["points"] < 2 or not exp["j_max"] > exp["j_min"]:
                raise ConfigError("experiment: need j_max > j_min and points >= 2")
            js = list(np.linspace(exp["j_min"], exp["j_max"], exp["points"]))
        else:
            raise ConfigError(
                "experiment: provide j_values or the full j_min/j_max/points trio"
            )
        out = {"j_values": js}
        if kind == "sweep_j":
            out["locate_crossings"] = exp["locate_crossings"]
        return out
    if kind == "disorder":
        if not has("w") or not has("realizations"):
            raise ConfigError(
                "experiment.w and experiment.realizations are required for kind disorder"
            )
        if exp["w"] < 0:
            raise ConfigError("experiment.w must be nonnegative")
        if exp["realizations"] < 1:
            raise ConfigError("experiment.realizations must be >= 1")
        return {"w": exp["w"], "realizations": exp["realizations"]}
    if kind == "spectrum":
        if not (has("j_min") and has("j_max")):
            raise ConfigError("experiment.j_min and experiment.j_max are required")
        if not exp["j_max"] > exp["j_min"]:
            raise ConfigError("experiment: need j_max > j_min")
        points = exp["points"] if has("points") else 101
        if points < 2:
            raise ConfigError("experiment.points must be >= 2")
        return {
            "j_min": exp["j_min"],
            "j_max": exp["j_max"],
            "points": points,
            "grid": exp["grid"],
        }
    raise AssertionError(kind)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return CSV_FMT % v


def _write_csv(path: str, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _auto_t_max(rc: RunConfig) -> float | None:
    if rc.experiment in ("dynamics", "tau_scan"):
        return 20.0
    if rc.experiment == "spectrum":
        return None
    return steady_horizon(rc.spec)


def _dynamics_cfg(rc: RunConfig) -> EvolutionConfig:
    return EvolutionConfig(
        dt=rc.dt,
        t_max=rc.t_max if rc.t_max is not None else 20.0,
        sample_stride=rc.sample_stride,
        steady_tol=rc.steady_tol,
        guard_tol=rc.guard_tol,
    )


def _steady_cfg(rc: RunConfig) -> EvolutionConfig:
    return EvolutionConfig(
        dt=rc.dt,
        t_max=rc.t_max if rc.t_max is not None else steady_horizon(rc.spec),
        sample_stride=rc.sample_stride,
        steady_tol=rc.steady_tol,
        guard_tol=rc.guard_tol,
    )


def _point_record(p) -> dict:
    return {
        "param": p.param,
        "delta_e": None if math.isnan(p.delta_e) else p.delta_e,
        "ergotropy": None if math.isnan(p.ergotropy) else p.ergotropy,
        "residual": None if math.isnan(p.residual) else p.residual,
        "converged": p.converged,
        "error": p.error,
    }


def _steady_rows(points):
    for p in points:
        yield [p.param, p.delta_e, p.ergotropy, p.efficiency, p.residual]


def _run_experiment(rc: RunConfig, out_dir: str, threads: int, seed: int):
    """Dispatch one experiment; returns (csv files, manifest extras, failures)."""
    prefix = os.path.join(out_dir, rc.prefix)
    files: list[str] = []
    extras: dict = {}
    failures: list[str] = []

    if rc.experiment == "dynamics":
        series = run_dynamics(rc.spec, _dynamics_cfg(rc))
        rows = zip(series.t, series.delta_e, series.ergotropy, series.efficiency, series.power)
        path = prefix + ".csv"
        _write_csv(path, ["t", "delta_e", "ergotropy", "efficiency", "power"], rows)
        files.append(path)

    elif rc.experiment == "sweep_n":
        result = sweep_spin_number(
            rc.spec, rc.params["n_values"], _steady_cfg(rc), workers=threads
        )
        path = prefix + ".csv"
        _write_csv(
            path,
            ["n", "delta_e_ss", "ergotropy_ss", "efficiency_ss", "residual"],
            _steady_rows(result.points),
        )
        files.append(path)
        extras["points"] = [_point_record(p) for p in result.points]
        failures += [
            f"n={p.param:g}: {p.error}" for p in result.points if p.error is not None
        ]

    elif rc.experiment == "sweep_j":
        result = sweep_hopping(
            rc.spec,
            rc.params["j_values"],
            _steady_cfg(rc),
            workers=threads,
            locate_crossings=rc.params["locate_crossings"],
        )
        path = prefix + ".csv"
        _write_csv(
            path,
            ["j", "delta_e_ss", "ergotropy_ss", "efficiency_ss", "residual"],
            _steady_rows(result.points),
        )
        files.append(path)
        if "crossings" in result.metadata:
            cpath = prefix + ".crossings.csv"
            _write_csv(cpath, ["j_cross"], ([j] for j in result.metadata["crossings"]))
            files.append(cpath)
            extras["crossings"] = result.metadata["crossings"]
        extras["points"] = [_point_record(p) for p in result.points]
        failures += [
            f"j={p.param:g}: {p.error}" for p in result.points if p.error is not None
        ]

    elif rc.experiment == "disorder":
        result = disorder_ensemble(
            rc.spec,
            rc.params["w"],
            rc.params["realizations"],
            base_seed=seed,
            config=_steady_cfg(rc),
            workers=threads,
        )
        path = prefix + ".csv"
        rows = (
            [int(k), s, p.delta_e, p.ergotropy, p.efficiency, p.residual]
            for k, (s, p) in enumerate(zip(result.seeds, result.points))
        )
        _write_csv(
            path,
            ["realization", "seed", "delta_e_ss", "ergotropy_ss", "efficiency_ss", "residual"],
            rows,
        )
        files.append(path)
        extras["seeds"] = result.seeds
        extras["w"] = rc.params["w"]
        if result.ensemble is not None:
            extras["ensemble"] = {
                "mean_delta_e": result.ensemble.mean_delta_e,
                "sem_delta_e": result.ensemble.sem_delta_e,
                "mean_ergotropy": result.ensemble.mean_ergotropy,
                "sem_ergotropy": result.ensemble.sem_ergotropy,
                "n_success": result.ensemble.n_success,
            }
        extras["points"] = [_point_record(p) for p in result.points]
        failures += [
            f"realization {p.param:g}: {p.error}"
            for p in result.points
            if p.error is not None
        ]

    elif rc.experiment == "tau_scan":
        result = charging_time_scan(
            rc.spec, rc.params["j_values"], _dynamics_cfg(rc), workers=threads
        )
        path = prefix + ".csv"
        _write_csv(path, ["j", "tau_c"], zip(result.j_values, result.tau_c))
        files.append(path)
        js = result.j_values
        if len(js) > 1 and max(js) > min(js):
            crossings = list(ground_crossings(rc.spec, min(js), max(js)))
            cpath = prefix + ".crossings.csv"
            _write_csv(cpath, ["j_cross"], ([j] for j in crossings))
            files.append(cpath)
            extras["crossings"] = crossings
        failures += [
            f"j={j:g}: {err}"
            for j, err in zip(result.j_values, result.errors)
            if err is not None
        ]

    elif rc.experiment == "spectrum":
        scan = scan_spectrum(
            rc.spec,
            rc.params["j_min"],
            rc.params["j_max"],
            rc.params["points"],
            crossing_grid=rc.params["grid"],
        )
        order = order_parameter_scan(rc.spec, scan.j_values)
        dim = scan.levels.shape[1]
        lpath = prefix + ".levels.csv"
        _write_csv(
            lpath,
            ["j"] + [f"level_{k}" for k in range(dim)],
            ([j] + list(row) for j, row in zip(scan.j_values, scan.levels)),
        )
        opath = prefix + ".order.csv"
        _write_csv(
            opath,
            ["j", "m_z", "xi_z"],
            zip(order.j_values, order.m_z, order.xi_z),
        )
        cpath = prefix + ".crossings.csv"
        _write_csv(cpath, ["j_cross"], ([j] for j in scan.crossings))
        files += [lpath, opath, cpath]
        extras["crossings"] = list(scan.crossings)
        extras["order_discontinuities"] = list(order.discontinuities)
        # simple closed-form candidates for the first/last crossing are checked
        # against the computed values; the computed values are authoritative
        n = rc.spec.n_spins
        candidates = {
            "first": 1.0 / math.sqrt(n),
            "last": math.sqrt(n),
        }
        consistent = (
            len(scan.crossings) >= 1
            and abs(scan.crossings[0] - candidates["first"]) <= 1e-6
            and abs(scan.crossings[-1] - candidates["last"]) <= 1e-6
        )
        extras["closed_form"] = {
            "candidates": candidates,
            "consistent": consistent,
        }

    else:
        raise AssertionError(rc.experiment)

    return files, extras, failures


def run(
    rc: RunConfig,
    out_dir: str = ".",
    threads: int = 1,
    seed: int = 0,
    verbose: bool = False,
    log=print,
) -> int:
    """Execute a parsed run; returns the process exit code."""
    os.makedirs(out_dir, exist_ok=True)
    for line in rc.defaults_applied:
        log(f"default: {line}")
    for msg in rc.warnings:
        log(f"warning: {msg}")
    if verbose:
        log(f"model: {rc.spec}")
        log(f"experiment: {rc.experiment} params={rc.params}")

    t0 = time.perf_counter()
    files, extras, failures = _run_experiment(rc, out_dir, threads, seed)
    wall = time.perf_counter() - t0

    manifest = {
        "version": __version__,
        "experiment": rc.experiment,
        "config": _jsonable(rc.raw),
        "resolved": {
            "fock_cutoff": rc.spec.fock_cutoff,
            "dt": rc.dt if rc.dt is not None else default_time_step(rc.spec),
            "t_max": rc.t_max if rc.t_max is not None else _auto_t_max(rc),
        },
        "flags": {"threads": threads, "seed": seed, "out_dir": out_dir},
        "defaults_applied": rc.defaults_applied,
        "warnings": rc.warnings,
        "outputs": [os.path.basename(f) for f in files],
        "failures": failures,
        "wall_time_s": wall,
    }
    manifest.update(_jsonable(extras))
    mpath = os.path.join(out_dir, rc.prefix + ".manifest.json")
    with open(mpath, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    for f in files + [mpath]:
        if verbose:
            log(f"wrote {f}")
    if failures:
        for msg in failures:
            log(f"flagged: {msg}")
        log(f"{rc.experiment}: {len(failures)} flagged point(s)")
        return 1
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="qbattery",
        description="Run quantum-battery charging experiments from a config file.",
    )
    parser.add_argument("--config", required=True, help="path to the run config")
    parser.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count() or 1,
        help="worker threads for independent sweep points",
    )
    parser.add_argument("--out-dir", default=".", help="directory for output files")
    parser.add_argument(
        "--seed", type=int, default=0, help="base seed for disorder ensembles"
    )
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    try:
        rc = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(
            rc,
            out_dir=args.out_dir,
            threads=args.threads,
            seed=args.seed,
            verbose=args.verbose,
        )
    except Exception as exc:
        print(f"{rc.experiment} failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
