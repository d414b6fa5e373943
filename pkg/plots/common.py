"""Shared helpers for the plot scripts: schema-checked CSV loading and
deterministic figure output.

The scripts are pure readers of the simulator's artifact files; they never
import the simulator package and never write into the input directory.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SERIES_COLUMNS = ["t", "sup_u", "sup_du_in_cone", "sup_du_out_cone",
                  "E1", "E2", "W_K_partial", "log_disp_partial"]
CHAR_COLUMNS = ["family", "seed_kind", "seed", "tau", "r"]


class SchemaError(ValueError):
    """An input file does not carry the columns a figure needs."""


def style():
    plt.rcParams.update({
        "figure.figsize": (7.0, 4.6),
        "figure.dpi": 110,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "svg.hashsalt": "qwave-plots",
    })


def load_columns(path, required):
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file not found")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing} (has {header})")
        idx = {c: header.index(c) for c in required}
        cols = {c: [] for c in required}
        for line in fh:
            parts = line.rstrip("\n").split(",")
            for c in required:
                cols[c].append(parts[idx[c]])
    return cols


def load_series(path):
    cols = load_columns(path, SERIES_COLUMNS)
    return {k: [float(x) for x in v] for k, v in cols.items()}


def load_characteristics(paths):
    curves = []
    for path in paths:
        cols = load_columns(path, CHAR_COLUMNS)
        rows = list(zip(cols["family"], cols["seed_kind"], cols["seed"],
                        (float(x) for x in cols["tau"]),
                        (float(x) for x in cols["r"])))
        key = None
        taus, rs = [], []
        for family, kind, seed, tau, r in rows:
            if (family, kind, seed) != key:
                if key is not None:
                    curves.append((key[0], taus, rs))
                key = (family, kind, seed)
                taus, rs = [], []
            taus.append(tau)
            rs.append(r)
        if key is not None:
            curves.append((key[0], taus, rs))
    return curves


def load_report(path):
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file not found")
    payload = json.loads(path.read_text(encoding="utf-8"))
    if "bounds" not in payload:
        raise SchemaError(f"{path}: missing 'bounds' section")
    return payload


def save_figure(fig, out_dir, name):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    png = out_dir / f"{name}.png"
    svg = out_dir / f"{name}.svg"
    fig.savefig(png)
    fig.savefig(svg, metadata={"Date": None})
    plt.close(fig)
    return png, svg


def placeholder(out_dir, name, message):
    style()
    fig, ax = plt.subplots()
    ax.text(0.5, 0.5, message, ha="center", va="center", transform=ax.transAxes)
    ax.set_axis_off()
    return save_figure(fig, out_dir, name)


def standard_parser(description):
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="artifact directory of a completed run")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="directory for the emitted PNG and SVG")
    return parser
