#!/usr/bin/env python3
"""Energy growth and dispersion accumulation of a run.

Left panel: E2 against (1 + t) on log-log axes with the fitted growth
exponent from report.json (bound id A7) annotated. Right panel: the
running dispersion integral against ln(1 + t), which should flatten to a
line if the sup-norm decay is genuinely of 1/(1+t) type. Writes
energy_growth.png/.svg.
"""

import math
import sys
from pathlib import Path

import matplotlib.pyplot as plt

sys.path.insert(0, str(Path(__file__).resolve().parent))
from common import SchemaError, load_report, load_series, placeholder, save_figure, standard_parser, style


def main(argv=None):
    args = standard_parser(__doc__.splitlines()[0]).parse_args(argv)
    series = load_series(Path(args.in_dir) / "series.csv")
    report = load_report(Path(args.in_dir) / "report.json")
    ts = series["t"]
    e2 = series["E2"]
    disp = series["log_disp_partial"]
    if not any(y > 0 for y in e2):
        placeholder(args.out_dir, "energy_growth", "energies are identically zero")
        print("energy_growth: empty data, placeholder written")
        return 0

    theta = report["bounds"].get("A7", {}).get("fitted_constant")
    style()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.5, 4.4))
    one_t = [1.0 + t for t in ts]
    ax1.loglog(one_t, e2, marker=".", lw=1.2)
    if theta is not None and math.isfinite(theta):
        guide = [e2[0] * x**theta for x in one_t]
        ax1.loglog(one_t, guide, "--", color="gray",
                   label=f"(1+t)^theta, theta = {theta:.2e}")
        ax1.legend()
    ax1.set_xlabel("1 + t")
    ax1.set_ylabel("E2")
    ax1.set_title("energy growth")

    ax2.plot([math.log1p(t) for t in ts], disp, marker=".", lw=1.2)
    ax2.set_xlabel("ln(1 + t)")
    ax2.set_ylabel("running dispersion integral")
    ax2.set_title("dispersion accumulation")
    fig.tight_layout()
    save_figure(fig, args.out_dir, "energy_growth")
    print(f"energy_growth: theta = {theta}")
    return 0


if __name__ == "__main__":
    try:
        raise SystemExit(main())
    except SchemaError as exc:
        print(f"plot_growth: {exc}", file=sys.stderr)
        raise SystemExit(1)
