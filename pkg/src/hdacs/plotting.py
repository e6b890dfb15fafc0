"""Presentation-only plotting of sweep tables.

Reads the tab-separated tables produced by the sweep command and renders one
vector graphic per table; nothing is recomputed here.  Output bytes are
deterministic for identical inputs (fixed SVG hash salt, no embedded dates).
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "hdacs"

import matplotlib.pyplot as plt


class PlotError(ValueError):
    """A table is missing or lacks a required column."""


def read_table(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise PlotError(f"{path}: empty table")
    header = lines[0].split("\t")
    rows = [dict(zip(header, ln.split("\t"))) for ln in lines[1:]]
    return header, rows


def _require(path, header, *columns):
    for col in columns:
        if col not in header:
            raise PlotError(f"{os.path.basename(path)}: missing column {col!r}")


# table name -> (x column, series-key columns, y column)
TABLE_LAYOUT = {
    "measurements_by_factor.tsv": ("factor", ("method",), "value"),
    "measurements_by_size.tsv": ("size", ("factor", "method"), "value"),
    "compression_by_level.tsv": ("level", ("factor", "protocol"), "gamma"),
    "energy_by_size.tsv": ("size", ("method",), "value"),
    "simulated_totals.tsv": ("size", ("factor", "method"), "units"),
}


def plot_table(path, out_path):
    name = os.path.basename(path)
    layout = TABLE_LAYOUT.get(name)
    if layout is None:
        raise PlotError(f"{name}: no plot layout for this table")
    x_col, key_cols, y_col = layout
    header, rows = read_table(path)
    _require(path, header, x_col, y_col, *key_cols)
    if not rows:
        raise PlotError(f"{name}: table has a header but no rows")

    series = {}
    for row in rows:
        key = "/".join(row[c] for c in key_cols)
        series.setdefault(key, []).append((float(row[x_col]), float(row[y_col])))

    fig, ax = plt.subplots(figsize=(6, 4))
    for key in sorted(series):
        pts = sorted(series[key])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=key)
    ax.set_xlabel(x_col)
    ax.set_ylabel(y_col)
    ax.set_title(name.replace(".tsv", ""))
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path


def plot_tables(table_dir, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    produced = []
    for name in sorted(TABLE_LAYOUT):
        src = os.path.join(table_dir, name)
        if os.path.exists(src):
            dst = os.path.join(out_dir, name.replace(".tsv", ".svg"))
            produced.append(plot_table(src, dst))
    if not produced:
        raise PlotError(f"no known tables found in {table_dir}")
    return produced
