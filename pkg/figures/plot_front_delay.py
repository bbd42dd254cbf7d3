#!/usr/bin/env python3
"""Front delay against ln t with the fitted log law overlaid.

Usage: plot_front_delay.py FRONTS_CSV FIT_JSON OUT_IMAGE

FRONTS_CSV needs columns t, r_level (delay is recomputed from the fit's
speed when present, otherwise from the CSV's own delay column). A missing
or unreadable FIT_JSON degrades to the raw scatter.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))
from _common import InputError, load_csv, load_json_optional, run_main


def main(argv):
    if len(argv) != 3:
        raise InputError("usage: plot_front_delay.py FRONTS_CSV FIT_JSON OUT")
    fronts_path, fit_path, out_path = argv
    table = load_csv(fronts_path, required=("t", "r_level"))
    t, r = table["t"], table["r_level"]
    fit = load_json_optional(fit_path)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if fit is not None and "c_fit" in fit:
        c = float(fit["c_fit"])
        delay = c * t - r
        ax.plot(np.log(t), delay, "o", ms=3.5, label="measured delay")
        k, s = float(fit["k_fit"]), float(fit["s_fit"])
        tt = np.linspace(np.log(t.min()), np.log(t.max()), 200)
        ax.plot(tt, k * tt - s, "-", lw=1.5,
                label=f"fit: {k:.3f} ln t - ({s:.3f})")
        k_target = 1.0 / c if c else float("nan")
        ax.set_title(f"k_fit = {k:.4f}   vs   (N-1)/c* multiples of "
                     f"{k_target:.4f}")
    else:
        if "delay" not in table:
            raise InputError(f"{fronts_path}: no delay column and no usable "
                             "fit overlay")
        ax.plot(np.log(t), table["delay"], "o", ms=3.5,
                label="measured delay (no fit overlay)")
        ax.set_title("front delay (raw)")
    ax.set_xlabel("ln t")
    ax.set_ylabel("c* t - r_level(t)")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


if __name__ == "__main__":
    run_main(main)
