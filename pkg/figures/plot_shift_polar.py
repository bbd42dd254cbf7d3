#!/usr/bin/env python3
"""Polar plot of the angle-dependent front shift s(Theta).

Usage: plot_shift_polar.py SHIFT_CSV OUT_IMAGE

SHIFT_CSV needs columns theta_rad, s_value. The curve is annotated with the
max-min range and the discrete Lipschitz estimate.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))
from _common import InputError, load_csv, run_main


def main(argv):
    if len(argv) != 2:
        raise InputError("usage: plot_shift_polar.py SHIFT_CSV OUT")
    shift_path, out_path = argv
    table = load_csv(shift_path, required=("theta_rad", "s_value"))
    theta, s = table["theta_rad"], table["s_value"]

    closed_t = np.concatenate([theta, theta[:1] + 2.0 * np.pi])
    closed_s = np.concatenate([s, s[:1]])
    ds = np.abs(np.diff(closed_s))
    dth = np.diff(closed_t)
    lip = float(np.max(ds / dth)) if dth.size else 0.0

    fig = plt.figure(figsize=(5.4, 5.4))
    ax = fig.add_subplot(projection="polar")
    # Offset so mildly negative shifts still render as a closed curve.
    radial = closed_s - closed_s.min() + 0.1 * max(np.ptp(closed_s), 1e-12)
    ax.plot(closed_t, radial, lw=1.6)
    ax.set_yticklabels([])
    ax.set_title(
        f"front shift s(Theta)\nrange = {np.ptp(s):.3f}, "
        f"Lipschitz estimate = {lip:.3f}", va="bottom")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


if __name__ == "__main__":
    run_main(main)
