"""Figure job loading and validation.

A job file is JSON: an output image, a panel grid, and one entry per panel
naming the CSV it draws and how to label it.  Validation is strict and happens
at load time: unknown keys, missing files, and header mismatches are all
rejected with the offending file named.

    {
      "layout": [1, 2],
      "output": "charging.png",
      "panels": [
        {"kind": "energy", "csv": "dyn.csv", "xlabel": "gt"},
        {"kind": "ergotropy", "csv": "dyn.csv", "xlabel": "gt"}
      ]
    }

CSV paths are resolved relative to the job file's directory.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "JobError",
    "PanelSpec",
    "FigureJob",
    "read_columns",
    "load_job",
    "PANEL_HEADERS",
]


class JobError(ValueError):
    """Job file or referenced artifact rejected."""


DYNAMICS_HEADER = ["t", "delta_e", "ergotropy", "efficiency", "power"]

# expected CSV header per panel kind; "levels" is special-cased (the number of
# level columns depends on the chain length)
PANEL_HEADERS: dict[str, list[str]] = {
    "energy": DYNAMICS_HEADER,
    "ergotropy": DYNAMICS_HEADER,
    "power": DYNAMICS_HEADER,
    "efficiency": DYNAMICS_HEADER,
    "sweep_n": ["n", "delta_e_ss", "ergotropy_ss", "efficiency_ss", "residual"],
    "sweep_j": ["j", "delta_e_ss", "ergotropy_ss", "efficiency_ss", "residual"],
    "levels": [],
    "order": ["j", "m_z", "xi_z"],
    "tau": ["j", "tau_c"],
    "disorder": [
        "realization",
        "seed",
        "delta_e_ss",
        "ergotropy_ss",
        "efficiency_ss",
        "residual",
    ],
}

CROSSINGS_HEADER = ["j_cross"]

# panel kinds that may carry a crossings CSV for vertical markers
MARKER_KINDS = ("sweep_j", "levels", "tau", "order")


def read_columns(path: str) -> dict[str, np.ndarray]:
    """Read a CSV into named float columns; empty cells become NaN."""
    if not os.path.exists(path):
        raise JobError(f"{path}: no such file")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not any(cell for cell in rows[0]):
        raise JobError(f"{path}: empty file, expected a header row")
    header = rows[0]
    data: dict[str, list[float]] = {name: [] for name in header}
    for k, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise JobError(f"{path}: row {k} has {len(row)} cells, expected {len(header)}")
        for name, cell in zip(header, row):
            try:
                data[name].append(float(cell) if cell != "" else math.nan)
            except ValueError:
                raise JobError(f"{path}: row {k}, column {name}: bad value {cell!r}") from None
    return {name: np.array(vals, dtype=float) for name, vals in data.items()}


def _check_header(path: str, kind: str) -> None:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
    got = first.split(",") if first else []
    if kind == "levels":
        if not got or got[0] != "j" or len(got) < 2:
            raise JobError(f"{path}: expected header j,level_0,... for a levels panel")
        for i, name in enumerate(got[1:]):
            if name != f"level_{i}":
                raise JobError(f"{path}: expected column level_{i}, found {name!r}")
        return
    want = PANEL_HEADERS[kind]
    if got != want:
        raise JobError(
            f"{path}: header {','.join(got)!r} does not match "
            f"{','.join(want)!r} expected for a {kind} panel"
        )


def _check_crossings_header(path: str) -> None:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
    if first.split(",") != CROSSINGS_HEADER:
        raise JobError(f"{path}: expected header j_cross for a crossings file")


@dataclass(frozen=True)
class PanelSpec:
    """One axes: a kind, its source CSV, and optional labels and ranges."""

    kind: str
    csv: str
    crossings: str | None = None
    manifest: str | None = None
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    xrange: tuple[float, float] | None = None
    yrange: tuple[float, float] | None = None


@dataclass(frozen=True)
class FigureJob:
    """A validated figure: panel grid, panel specs, optional output path."""

    panels: tuple[PanelSpec, ...]
    layout: tuple[int, int]
    output: str | None = None
    suptitle: str | None = None


_PANEL_KEYS = {
    "kind",
    "csv",
    "crossings",
    "manifest",
    "title",
    "xlabel",
    "ylabel",
    "xrange",
    "yrange",
}
_JOB_KEYS = {"panels", "layout", "output", "suptitle"}


def _parse_range(value, where: str) -> tuple[float, float] | None:
    if value is None:
        return None
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) for v in value)
    ):
        raise JobError(f"{where}: expected a [low, high] pair")
    return (float(value[0]), float(value[1]))


def _parse_panel(entry: dict, base: str, index: int) -> PanelSpec:
    where = f"panel {index}"
    if not isinstance(entry, dict):
        raise JobError(f"{where}: expected an object")
    unknown = set(entry) - _PANEL_KEYS
    if unknown:
        raise JobError(f"{where}: unknown key(s) {', '.join(sorted(unknown))}")
    kind = entry.get("kind")
    if kind not in PANEL_HEADERS:
        raise JobError(
            f"{where}: kind must be one of {', '.join(sorted(PANEL_HEADERS))}, got {kind!r}"
        )
    if "csv" not in entry:
        raise JobError(f"{where}: csv is required")
    path = os.path.join(base, entry["csv"])
    _check_header(path if os.path.exists(path) else _missing(path), kind)

    crossings = entry.get("crossings")
    if crossings is not None:
        if kind not in MARKER_KINDS:
            raise JobError(f"{where}: crossings markers are not defined for kind {kind}")
        crossings = os.path.join(base, crossings)
        _check_crossings_header(crossings if os.path.exists(crossings) else _missing(crossings))

    manifest = entry.get("manifest")
    if manifest is not None:
        if kind != "disorder":
            raise JobError(f"{where}: manifest input is only used by disorder panels")
        manifest = os.path.join(base, manifest)
        if not os.path.exists(manifest):
            raise JobError(f"{manifest}: no such file")

    for key in ("title", "xlabel", "ylabel"):
        if entry.get(key) is not None and not isinstance(entry[key], str):
            raise JobError(f"{where}: {key} must be a string")
    return PanelSpec(
        kind=kind,
        csv=path,
        crossings=crossings,
        manifest=manifest,
        title=entry.get("title"),
        xlabel=entry.get("xlabel"),
        ylabel=entry.get("ylabel"),
        xrange=_parse_range(entry.get("xrange"), f"{where}: xrange"),
        yrange=_parse_range(entry.get("yrange"), f"{where}: yrange"),
    )


def _missing(path: str) -> str:
    raise JobError(f"{path}: no such file")


def load_job(path: str) -> FigureJob:
    """Parse and fully validate a job file; all referenced CSVs are checked."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise JobError(f"cannot read job file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise JobError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise JobError(f"{path}: expected a JSON object")
    unknown = set(raw) - _JOB_KEYS
    if unknown:
        raise JobError(f"{path}: unknown key(s) {', '.join(sorted(unknown))}")
    entries = raw.get("panels")
    if not isinstance(entries, list) or not entries:
        raise JobError(f"{path}: panels must be a non-empty list")

    base = os.path.dirname(os.path.abspath(path))
    panels = tuple(_parse_panel(e, base, i) for i, e in enumerate(entries))

    layout_raw = raw.get("layout", [1, len(panels)])
    if (
        not isinstance(layout_raw, (list, tuple))
        or len(layout_raw) != 2
        or not all(isinstance(v, int) and v >= 1 for v in layout_raw)
    ):
        raise JobError(f"{path}: layout must be [rows, cols] of positive integers")
    layout = (layout_raw[0], layout_raw[1])
    if layout[0] * layout[1] < len(panels):
        raise JobError(
            f"{path}: layout {layout[0]}x{layout[1]} cannot hold {len(panels)} panels"
        )

    output = raw.get("output")
    if output is not None:
        if not isinstance(output, str):
            raise JobError(f"{path}: output must be a string path")
        output = os.path.join(base, output)
    suptitle = raw.get("suptitle")
    if suptitle is not None and not isinstance(suptitle, str):
        raise JobError(f"{path}: suptitle must be a string")
    return FigureJob(panels=panels, layout=layout, output=output, suptitle=suptitle)
