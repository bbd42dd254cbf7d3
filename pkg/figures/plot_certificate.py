#!/usr/bin/env python3
"""Certificate trajectories: q(t) on a log scale with its decay envelope,
and the correction shift xi(t) with its constant bound.

Usage: plot_certificate.py CERT_CSV CERT_JSON OUT_IMAGE

CERT_CSV needs columns t, q, xi. CERT_JSON supplies the envelope constants
(K plus the params echo); without it the raw trajectories are drawn.
Envelope violations, if any, are marked.
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
        raise InputError("usage: plot_certificate.py CERT_CSV CERT_JSON OUT")
    csv_path, json_path, out_path = argv
    table = load_csv(csv_path, required=("t", "q", "xi"))
    t, q, xi = table["t"], table["q"], table["xi"]
    cert = load_json_optional(json_path)

    fig, (ax_q, ax_xi) = plt.subplots(1, 2, figsize=(9.6, 4.0))
    ax_q.semilogy(t, np.maximum(q, 1e-300), lw=1.4, label="q(t)")
    ax_xi.plot(t, xi, lw=1.4, label="xi(t)")

    if cert is not None and "K" in cert and "params" in cert:
        K = float(cert["K"])
        p = cert["params"]
        amp = float(p["eta"]) + 1.0 / (float(p["eps"])
                                       * np.sqrt(float(p["T_start"])))
        env = K * (amp * np.exp(-0.5 * float(p["delta"])
                                * (t - float(p["T_start"])))
                   + t ** -1.5)
        ax_q.semilogy(t, env, "--", lw=1.2, label="envelope")
        bad = q > env * (1.0 + 1e-9)
        if np.any(bad):
            ax_q.semilogy(t[bad], q[bad], "rx", ms=6, label="violation")
        ax_xi.axhline(K * amp, ls="--", lw=1.2, label="bound")
        bad_xi = xi > K * amp * (1.0 + 1e-9)
        if np.any(bad_xi):
            ax_xi.plot(t[bad_xi], xi[bad_xi], "rx", ms=6, label="violation")
        verdict = cert.get("envelope_pass")
        fig.suptitle(f"certificate trajectories "
                     f"(envelope pass: {verdict}, K = {K:.3g})")
    else:
        fig.suptitle("certificate trajectories (no envelope overlay)")

    for ax, ylab in ((ax_q, "q"), (ax_xi, "xi")):
        ax.set_xscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel(ylab)
        ax.grid(alpha=0.3)
        ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


if __name__ == "__main__":
    run_main(main)
