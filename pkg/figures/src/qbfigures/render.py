"""Deterministic panel rendering.

Every panel draws exactly the numbers read from its CSV; nothing is rescaled,
smoothed, or recomputed here.  Crossing markers come from the crossings CSV the
job names.  The style is pinned so rerendering a job reproduces the image.
"""

from __future__ import annotations

import json
import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .jobs import FigureJob, JobError, PanelSpec, read_columns

__all__ = ["render", "STYLE"]

STYLE = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "grid.linewidth": 0.5,
    "lines.linewidth": 1.4,
    "legend.framealpha": 0.9,
    "figure.autolayout": True,
}

# plotted series per kind: (column, legend label)
_SERIES: dict[str, list[tuple[str, str]]] = {
    "energy": [("delta_e", r"$\Delta E$")],
    "ergotropy": [("ergotropy", r"$\varepsilon$")],
    "power": [("power", r"$P$")],
    "efficiency": [("efficiency", r"$R$")],
    "sweep_n": [("delta_e_ss", r"$\Delta E$"), ("ergotropy_ss", r"$\varepsilon$")],
    "sweep_j": [("delta_e_ss", r"$\Delta E$"), ("ergotropy_ss", r"$\varepsilon$")],
    "order": [("m_z", r"$M_z$"), ("xi_z", r"$\xi_z$")],
    "tau": [("tau_c", r"$\tau_c$")],
    "disorder": [("delta_e_ss", r"$\Delta E$"), ("ergotropy_ss", r"$\varepsilon$")],
}

_XCOL = {
    "energy": "t",
    "ergotropy": "t",
    "power": "t",
    "efficiency": "t",
    "sweep_n": "n",
    "sweep_j": "j",
    "levels": "j",
    "order": "j",
    "tau": "j",
    "disorder": "realization",
}

_DEFAULT_XLABEL = {
    "energy": "$gt$",
    "ergotropy": "$gt$",
    "power": "$gt$",
    "efficiency": "$gt$",
    "sweep_n": "$N$",
    "sweep_j": "$J$",
    "levels": "$J$",
    "order": "$J$",
    "tau": "$J$",
    "disorder": "realization",
}


def _require_points(panel: PanelSpec, name: str, values: np.ndarray) -> None:
    if values.size == 0:
        raise JobError(f"{panel.csv}: column {name} has no data rows")


def _draw_markers(ax, panel: PanelSpec, dump: list) -> None:
    if panel.crossings is None:
        return
    cols = read_columns(panel.crossings)
    marks = cols["j_cross"]
    for j in marks:
        ax.axvline(float(j), color="0.35", linestyle="--", linewidth=0.9)
    dump.append(("j_cross", marks, np.full(marks.shape, math.nan)))


def _draw_common(ax, panel: PanelSpec, cols: dict) -> list:
    """Line plots for every kind with a fixed series list."""
    x = cols[_XCOL[panel.kind]]
    _require_points(panel, _XCOL[panel.kind], x)
    dump = []
    for name, label in _SERIES[panel.kind]:
        y = cols[name]
        _require_points(panel, name, y)
        if panel.kind == "sweep_n":
            ax.bar(x, y, width=0.35 if name == "delta_e_ss" else 0.28, label=label)
        elif panel.kind == "disorder":
            ax.plot(x, y, "o", markersize=4, label=label)
        else:
            ax.plot(x, y, label=label)
        dump.append((name, x, y))
    if len(_SERIES[panel.kind]) > 1:
        ax.legend(loc="best")
    _draw_markers(ax, panel, dump)
    if panel.kind == "disorder" and panel.manifest is not None:
        with open(panel.manifest, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        ensemble = manifest.get("ensemble")
        if ensemble is not None:
            mean = float(ensemble["mean_delta_e"])
            ax.axhline(mean, color="0.35", linestyle=":", linewidth=1.0)
            dump.append(("mean_delta_e", np.array([math.nan]), np.array([mean])))
    return dump


def _draw_levels(ax, panel: PanelSpec, cols: dict) -> list:
    x = cols["j"]
    _require_points(panel, "j", x)
    dump = []
    k = 0
    while f"level_{k}" in cols:
        y = cols[f"level_{k}"]
        _require_points(panel, f"level_{k}", y)
        ax.plot(x, y, color="C0", linewidth=0.8, alpha=0.85)
        dump.append((f"level_{k}", x, y))
        k += 1
    _draw_markers(ax, panel, dump)
    return dump


def _draw_panel(ax, panel: PanelSpec) -> list:
    cols = read_columns(panel.csv)
    if panel.kind == "levels":
        dump = _draw_levels(ax, panel, cols)
    else:
        dump = _draw_common(ax, panel, cols)
    ax.set_xlabel(panel.xlabel if panel.xlabel is not None else _DEFAULT_XLABEL[panel.kind])
    if panel.ylabel is not None:
        ax.set_ylabel(panel.ylabel)
    if panel.title is not None:
        ax.set_title(panel.title)
    if panel.xrange is not None:
        ax.set_xlim(*panel.xrange)
    if panel.yrange is not None:
        ax.set_ylim(*panel.yrange)
    return dump


def _write_dump(path: str, dumped: list) -> None:
    fmt = "%.12g"

    def cell(v: float) -> str:
        return "" if math.isnan(v) else fmt % v

    lines = ["panel,series,x,y"]
    for index, series in dumped:
        for name, xs, ys in series:
            for xv, yv in zip(xs, ys):
                lines.append(f"{index},{name},{cell(float(xv))},{cell(float(yv))}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def render(job: FigureJob, out: str | None = None, dump: str | None = None) -> str:
    """Draw every panel of a job into one image file; returns the output path.

    With dump, the exact plotted values are also written to a long-format CSV
    (panel, series, x, y) so they can be compared back against the inputs.
    """
    target = out if out is not None else job.output
    if target is None:
        raise JobError("no output path: set output in the job or pass one explicitly")
    rows, cols = job.layout
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(
            rows, cols, figsize=(4.2 * cols, 3.1 * rows), squeeze=False
        )
        flat = axes.ravel()
        dumped = []
        try:
            for index, panel in enumerate(job.panels):
                dumped.append((index, _draw_panel(flat[index], panel)))
            for k in range(len(job.panels), rows * cols):
                flat[k].set_axis_off()
            if job.suptitle is not None:
                fig.suptitle(job.suptitle)
            fig.savefig(target, metadata={"Software": None})
        finally:
            plt.close(fig)
    if dump is not None:
        _write_dump(dump, dumped)
    return target
