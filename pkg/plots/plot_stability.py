#!/usr/bin/env python3
"""Stability gap history from a homotopy experiment.

Reads stability.json and plots gap(t)/kappa over time together with the
recorded sup ratio. Writes stability.png/stability.svg.
"""

import json
import sys
from pathlib import Path

import matplotlib.pyplot as plt

sys.path.insert(0, str(Path(__file__).resolve().parent))
from common import SchemaError, placeholder, save_figure, standard_parser, style


def main(argv=None):
    args = standard_parser(__doc__.splitlines()[0]).parse_args(argv)
    path = Path(args.in_dir) / "stability.json"
    if not path.exists():
        raise SchemaError(f"{path}: file not found")
    payload = json.loads(path.read_text(encoding="utf-8"))
    for key in ("kappa", "sup_ratio", "gaps"):
        if key not in payload:
            raise SchemaError(f"{path}: missing field '{key}'")
    kappa = payload["kappa"]
    ts = payload["gaps"]["t"]
    gaps = payload["gaps"]["gap"]
    if kappa == 0.0 or not gaps:
        placeholder(args.out_dir, "stability", "identical data: gap is zero")
        print("stability: zero gap, placeholder written")
        return 0

    style()
    fig, ax = plt.subplots()
    ax.plot(ts, [g / kappa for g in gaps], marker=".", lw=1.2)
    ax.axhline(payload["sup_ratio"], ls="--", color="gray",
               label=f"sup ratio = {payload['sup_ratio']:.3f}")
    ax.set_xlabel("t")
    ax.set_ylabel("gap(t) / kappa")
    ax.set_title(f"solution gap per unit data distance (kappa = {kappa:.2e})")
    ax.legend()
    save_figure(fig, args.out_dir, "stability")
    print(f"stability: sup ratio {payload['sup_ratio']:.4f}")
    return 0


if __name__ == "__main__":
    try:
        raise SystemExit(main())
    except SchemaError as exc:
        print(f"plot_stability: {exc}", file=sys.stderr)
        raise SystemExit(1)
