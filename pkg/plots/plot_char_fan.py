#!/usr/bin/env python3
"""Characteristic fan in the (r, t) plane with the interior cone line.

Reads one or more characteristics*.csv files from the input directory and
draws every curve: plus family solid, minus family dashed, and the cone
boundary r = t/4 + 1 dotted. Writes char_fan.png/char_fan.svg.
"""

import sys
from pathlib import Path

import matplotlib.pyplot as plt

sys.path.insert(0, str(Path(__file__).resolve().parent))
from common import SchemaError, load_characteristics, save_figure, standard_parser, style


def main(argv=None):
    args = standard_parser(__doc__.splitlines()[0]).parse_args(argv)
    paths = sorted(Path(args.in_dir).glob("characteristics*.csv"))
    if not paths:
        raise SchemaError(f"{args.in_dir}: no characteristics*.csv found")
    curves = load_characteristics(paths)
    if not curves:
        raise SchemaError(f"{args.in_dir}: characteristics files contain no curves")

    style()
    fig, ax = plt.subplots(figsize=(6.4, 6.0))
    t_max = 0.0
    for family, taus, rs in curves:
        ls = "-" if family == "plus" else "--"
        color = "tab:blue" if family == "plus" else "tab:red"
        ax.plot(rs, taus, ls, color=color, lw=1.0)
        t_max = max(t_max, taus[-1])
    cone_t = [0.0, t_max]
    ax.plot([1.0, t_max / 4 + 1.0], cone_t, ":", color="black",
            label="cone boundary r = t/4 + 1")
    ax.plot([], [], "-", color="tab:blue", label="plus family")
    ax.plot([], [], "--", color="tab:red", label="minus family")
    ax.set_xlabel("r")
    ax.set_ylabel("t")
    ax.set_title(f"characteristic fan ({len(curves)} curves)")
    ax.legend(loc="upper right")
    save_figure(fig, args.out_dir, "char_fan")
    print(f"char_fan: {len(curves)} curves drawn")
    return 0


if __name__ == "__main__":
    try:
        raise SystemExit(main())
    except SchemaError as exc:
        print(f"plot_char_fan: {exc}", file=sys.stderr)
        raise SystemExit(1)
