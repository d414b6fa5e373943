#!/usr/bin/env python3
"""Decay of sup|u| against (1 + t) on log-log axes, with a -3/5 slope guide.

Reads series.csv from the input directory, draws the measured curve next
to a reference line of slope -3/5 anchored at the first positive sample,
fits the late-time slope, and writes decay.png/decay.svg plus a small
decay_fit.json sidecar with the fitted slope.
"""

import json
import math
import sys
from pathlib import Path

import matplotlib.pyplot as plt

sys.path.insert(0, str(Path(__file__).resolve().parent))
from common import SchemaError, load_series, placeholder, save_figure, standard_parser, style


def fit_slope(ts, ys):
    pairs = [(math.log1p(t), math.log(y)) for t, y in zip(ts, ys)
             if y > 0 and t >= max(1.0, ts[-1] / 2)]
    if len(pairs) < 2:
        return None
    xs = [p[0] for p in pairs]
    zs = [p[1] for p in pairs]
    n = len(pairs)
    xbar, zbar = sum(xs) / n, sum(zs) / n
    num = sum((x - xbar) * (z - zbar) for x, z in zip(xs, zs))
    den = sum((x - xbar) ** 2 for x in xs)
    return num / den if den > 0 else None


def main(argv=None):
    args = standard_parser(__doc__.splitlines()[0]).parse_args(argv)
    series = load_series(Path(args.in_dir) / "series.csv")
    ts, sup = series["t"], series["sup_u"]
    if not any(y > 0 for y in sup):
        placeholder(args.out_dir, "decay", "series is identically zero")
        print("decay: empty data, placeholder written")
        return 0

    slope = fit_slope(ts, sup)
    style()
    fig, ax = plt.subplots()
    one_t = [1.0 + t for t in ts]
    ax.loglog(one_t, sup, marker=".", lw=1.2, label="sup |u(t, .)|")
    anchor = next((i for i, y in enumerate(sup) if y > 0), 0)
    guide = [sup[anchor] * (x / one_t[anchor]) ** (-0.6) for x in one_t]
    ax.loglog(one_t, guide, "--", color="gray", label="slope -3/5 guide")
    label = f"fitted late-time slope: {slope:.3f}" if slope is not None else ""
    ax.set_xlabel("1 + t")
    ax.set_ylabel("sup |u|")
    ax.set_title(f"amplitude decay  {label}")
    ax.legend()
    save_figure(fig, args.out_dir, "decay")

    with open(Path(args.out_dir) / "decay_fit.json", "w", encoding="utf-8") as fh:
        json.dump({"fitted_slope": slope, "guide_slope": -0.6}, fh, indent=2)
        fh.write("\n")
    print(f"decay: fitted slope {slope}")
    return 0


if __name__ == "__main__":
    try:
        raise SystemExit(main())
    except SchemaError as exc:
        print(f"plot_decay: {exc}", file=sys.stderr)
        raise SystemExit(1)
