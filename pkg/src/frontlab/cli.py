"""Command-line entry point and reproducible CSV/JSON emission.

Subcommands: profile, simulate1d, simulate2d, fit, certify, report. Exit
codes: 0 success, 2 configuration error, 3 numerical failure, 4 acceptance
failure (report subcommand). Numbers serialize with 17 significant digits
(the profile table uses 15 per its interface), so identical configs yield
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig, auto_window, parse_config
from .errors import ConfigError, FrontLabError
from .front_analysis import FrontHistory, fit_log_shift
from .nonlinearity import derive_gap_constants, make_cubic, make_tabulated, validate
from .wave_profile import solve_profile
from . import angular_solver as ang
from . import certificates as cert_mod
from . import radial_solver as rad

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4


def _fmt(x: float, sig: int = 17) -> str:
    return f"{x:.{sig - 1}e}"


def write_csv(path: Path, header: Sequence[str], columns: Sequence[np.ndarray],
              sig: int = 17) -> None:
    rows = len(columns[0])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            fh.write(",".join(_fmt(float(c[i]), sig) for c in columns) + "\n")


def read_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        raise ConfigError(f"{path} holds no data rows")
    return {name: data[:, j] for j, name in enumerate(header)}


def write_json(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _prepare_outdir(cfg: ExperimentConfig, out: Optional[str]) -> Path:
    if out:
        d = Path(out)
    else:
        stamp = time.strftime("%Y%m%d-%H%M%S")
        d = Path("runs") / f"{stamp}-{cfg.config_hash()}"
    d.mkdir(parents=True, exist_ok=True)
    (d / "config.json").write_text(cfg.canonical_json() + "\n")
    return d


def _report_skeleton(cfg: ExperimentConfig, subcommand: str) -> dict:
    return {
        "subcommand": subcommand,
        "config_hash": cfg.config_hash(),
        "versions": {"frontlab": __version__},
        "quantities": {},
        "targets": {},
        "tolerances": {},
        "passed": True,
    }


def _make_reaction(cfg: ExperimentConfig):
    kind = cfg["nonlinearity.kind"]
    if kind == "cubic":
        return make_cubic(cfg["nonlinearity.theta"])
    if kind == "user-tabulated":
        path = cfg["nonlinearity.table_path"]
        if not path:
            raise ConfigError("nonlinearity.table_path required for tabulated kind")
        table = read_csv(Path(path))
        return make_tabulated(table["u"], table["f"])
    raise ConfigError(f"nonlinearity.kind unknown: {kind!r}")


def _segment_dt(state, t_end: float, bound_fn, cap: float) -> float:
    """Admissible fixed dt for [state.t, t_end]: the bound probed across it.

    The stability bound is not monotone in time (the moving-frame offset
    c* t - k ln t dips at t = k/c*), so the minimum over probe times is
    taken rather than the value at the segment start.
    """
    from dataclasses import replace
    probes = list(np.linspace(state.t, t_end, 9))
    if state.k_shift > 0:
        t_star = state.k_shift / state.c_star
        if state.t < t_star < t_end:
            probes.append(t_star)
    bound = min(bound_fn(replace(state, t=tt)) for tt in probes)
    return min(0.85 * bound, cap)


def _staged_run_1d(state, t_final: float, snapshot_times, dt_fixed: float,
                   dt_cap: float, level: float):
    """Advance in time-doubling segments, each at its own admissible fixed dt."""
    snaps = [state]
    times, pos = [], []
    current = state
    while current.t < t_final - 1e-9:
        seg_end = min(max(2.0 * current.t, current.t + 1.0), t_final)
        dt = dt_fixed if not math.isnan(dt_fixed) else _segment_dt(
            current, seg_end, rad.stability_dt, dt_cap)
        res = rad.run(current, seg_end, snapshot_times=snapshot_times,
                      dt=dt, level=level)
        current = res.snapshots[-1]
        snaps.extend(res.snapshots[1:])
        times.extend(res.history.times[1:] if times else res.history.times)
        pos.extend(res.history.positions[1:] if pos else res.history.positions)
    times, pos = np.asarray(times), np.asarray(pos)
    keep = np.concatenate([[True], np.diff(times) > 0])
    hist = FrontHistory(times=times[keep], positions=pos[keep], level=level)
    return snaps, hist


def cmd_profile(cfg: ExperimentConfig, outdir: Path, csv_override=None) -> dict:
    reaction = _make_reaction(cfg)
    rep = validate(reaction)
    if not rep.passed:
        raise ConfigError("nonlinearity failed bistability validation: "
                          + "; ".join(c.name for c in rep.conditions
                                      if not c.passed))
    profile = solve_profile(reaction, cfg["profile.tol"])
    csv_path = csv_override if csv_override else outdir / "profile.csv"
    write_csv(csv_path, ["xi", "u", "du"],
              [profile.xi_grid, profile.u_values, profile.du_values], sig=15)
    report = _report_skeleton(cfg, "profile")
    report["quantities"]["c_star"] = profile.c_star
    report["quantities"]["tail_rates"] = list(profile.tail_rates)
    theta = cfg["nonlinearity.theta"]
    if cfg["nonlinearity.kind"] == "cubic":
        target = (1.0 - 2.0 * theta) / math.sqrt(2.0)
        report["targets"]["c_star"] = target
        report["tolerances"]["c_star"] = 1e-4
        report["passed"] = abs(profile.c_star - target) < 1e-4
    write_json(outdir / "report.json", report)
    return report


def _resolve_window(cfg: ExperimentConfig, c_star: float) -> tuple[float, float]:
    lo, hi = cfg["grid.window_lo"], cfg["grid.window_hi"]
    if math.isnan(lo) or math.isnan(hi):
        alo, ahi = auto_window(cfg["dimension.N"], c_star)
        lo = alo if math.isnan(lo) else lo
        hi = ahi if math.isnan(hi) else hi
    return lo, hi


def cmd_simulate1d(cfg: ExperimentConfig, outdir: Path) -> dict:
    reaction = _make_reaction(cfg)
    profile = solve_profile(reaction, cfg["profile.tol"])
    c = profile.c_star
    N = cfg["dimension.N"]
    frame = cfg["grid.frame"]
    dr = cfg["grid.dr"]
    datum = rad.InitialDatum(cfg["initial.kind"], cfg["initial.R1"],
                             cfg["initial.R2"], cfg["initial.width"])

    if frame == "moving":
        lo, hi = _resolve_window(cfg, c)
        grid = np.arange(lo, hi + 1e-9, dr)
    else:
        r_max = cfg["grid.r_max"]
        if math.isnan(r_max):
            r_max = c * cfg["time.t_final"] + cfg["initial.R2"] + 40.0
        grid = np.arange(0.0, r_max + 1e-9, dr)

    state = rad.build_initial(datum, grid, reaction, c, N_dim=N, frame=frame,
                              t0=cfg["time.t_start"], profile=profile)
    t_final = cfg["time.t_final"]
    cadence = cfg["time.snapshot_every"]
    snap_times = np.arange(state.t + cadence, t_final + 1e-9, cadence)
    snaps, hist = _staged_run_1d(state, t_final, snap_times, cfg["time.dt"],
                                 cfg["time.dt_cap"], cfg["fit.level"])

    t_col, r_col, u_col = [], [], []
    for s in snaps[:: max(1, len(snaps) // 12)] + [snaps[-1]]:
        t_col.append(np.full(s.r_grid.size, s.t))
        r_col.append(s.physical_radii())
        u_col.append(s.u)
    write_csv(outdir / "snapshots.csv", ["t", "r", "u"],
              [np.concatenate(t_col), np.concatenate(r_col),
               np.concatenate(u_col)])
    delay = c * hist.times - hist.positions
    write_csv(outdir / "fronts.csv", ["t", "r_level", "delay"],
              [hist.times, hist.positions, delay])

    report = _report_skeleton(cfg, "simulate1d")
    report["quantities"]["c_star"] = c
    report["quantities"]["k_standard"] = (N - 1) / c
    report["quantities"]["n_snapshots"] = len(snaps)
    report["quantities"]["front_final"] = float(hist.positions[-1])
    write_json(outdir / "report.json", report)
    return report


def cmd_simulate2d(cfg: ExperimentConfig, outdir: Path) -> dict:
    reaction = _make_reaction(cfg)
    profile = solve_profile(reaction, cfg["profile.tol"])
    gaps = derive_gap_constants(reaction, profile)
    c = profile.c_star
    dr = cfg["grid.dr"]
    lo, hi = _resolve_window(cfg, c)
    if math.isnan(cfg["grid.window_lo"]):
        # Auto 2D windows take extra left clearance: the angular stability
        # bound scales with the squared physical radius of the left edge.
        lo = max(lo, 10.0)
    grid = np.arange(lo, hi + 1e-9, dr)
    shape = cfg["initial.shape"]
    params = ({"a": cfg["initial.a"], "b": cfg["initial.b"]}
              if shape in ("ellipse", "circle") else
              {"rbar": cfg["initial.rbar"], "m": cfg["initial.m"],
               "eps": cfg["initial.eps_shape"]})
    field = ang.build_initial_2d(shape, params, grid, reaction, c,
                                 n_angles=cfg["grid.n_angles"],
                                 t0=cfg["time.t_start"],
                                 smoothing=cfg["initial.smoothing"])
    t_final = cfg["time.t_final"]
    cadence = cfg["time.snapshot_every"]
    level = cfg["fit.level"]

    diag_t, diag_g, diag_s, diag_v = [], [], [], []
    shift_last = None
    current = field
    fields_to_dump = [field]
    while current.t < t_final - 1e-9:
        seg_end = min(max(2.0 * current.t, current.t + 1.0), t_final)
        dt_cap = cfg["time.dt_cap"] if current.t < 100.0 \
            else 2.0 * cfg["time.dt_cap"]
        dt = cfg["time.dt"]
        if math.isnan(dt):
            dt = _segment_dt(current, seg_end, ang.stability_dt_2d, dt_cap)
        snap_times = np.arange(math.floor(current.t / cadence + 1) * cadence,
                               seg_end + 1e-9, cadence)
        res = ang.run_2d(current, seg_end, snapshot_times=snap_times, dt=dt,
                         level=level, profile=profile,
                         slope_band_M=gaps.M, keep_fields=1)
        d = res.diagnostics
        start = 1 if diag_t else 0
        diag_t.extend(d.times[start:])
        diag_g.extend(d.grad_theta_max[start:])
        diag_s.extend(d.sup_err_vs_shifted_wave[start:])
        diag_v.extend(d.min_V_window[start:])
        shift_last = res.shifts[-1]
        current = res.final
    fields_to_dump.append(current)

    for fld in fields_to_dump:
        tag = f"{fld.t:.0f}"
        J, I = fld.u.shape
        r_rep = np.tile(fld.r_grid, J)
        th_rep = np.repeat(fld.theta_grid, I)
        write_csv(outdir / f"field_t{tag}.csv", ["r", "theta", "u"],
                  [r_rep, th_rep, fld.u.ravel()])
    write_csv(outdir / "shift.csv", ["theta_rad", "s_value"],
              [shift_last.theta_grid, shift_last.s_values])
    write_csv(outdir / "diagnostics.csv",
              ["t", "grad_theta_max", "sup_err_vs_shifted_wave",
               "min_V_window"],
              [np.asarray(diag_t), np.asarray(diag_g), np.asarray(diag_s),
               np.asarray(diag_v)])

    report = _report_skeleton(cfg, "simulate2d")
    report["quantities"]["c_star"] = c
    report["quantities"]["shift_range"] = float(np.ptp(shift_last.s_values))
    report["quantities"]["shift_lipschitz"] = shift_last.lipschitz_estimate
    report["quantities"]["sup_err_final"] = float(diag_s[-1])
    report["quantities"]["grad_theta_max_final"] = float(diag_g[-1])
    report["quantities"]["min_V_final"] = float(diag_v[-1])
    report["targets"]["min_V_final"] = gaps.delta_M / 2.0
    report["passed"] = bool(diag_v[-1] >= gaps.delta_M / 2.0)
    write_json(outdir / "report.json", report)
    return report


def cmd_fit(cfg: ExperimentConfig, outdir: Path, fronts_path: str,
            c_star: Optional[float], json_override=None) -> dict:
    table = read_csv(Path(fronts_path))
    if "t" not in table or "r_level" not in table:
        raise ConfigError(f"{fronts_path} must carry columns t,r_level")
    hist = FrontHistory(times=table["t"], positions=table["r_level"],
                        level=cfg["fit.level"])
    mode = cfg["fit.mode"]
    if c_star is None and mode in ("fixed_speed", "const"):
        reaction = _make_reaction(cfg)
        c_star = solve_profile(reaction, cfg["profile.tol"]).c_star
    wlo, whi = cfg["fit.window_lo"], cfg["fit.window_hi"]
    window = None if math.isnan(wlo) or math.isnan(whi) else (wlo, whi)
    fit = fit_log_shift(hist, mode=mode, c_star=c_star, window=window)
    out = {
        "c_fit": fit.c_fit, "k_fit": fit.k_fit, "s_fit": fit.s_fit,
        "residual_rms": fit.residual_rms,
        "window": list(fit.window), "mode": fit.mode,
    }
    path = json_override if json_override else outdir / "fit.json"
    write_json(path, out)

    report = _report_skeleton(cfg, "fit")
    report["quantities"].update(out)
    N = cfg["dimension.N"]
    target = (N - 1) / fit.c_fit if fit.c_fit else math.nan
    report["targets"]["k_fit"] = target
    report["tolerances"]["k_fit_rel"] = 0.10
    if mode == "fixed_speed" and target:
        report["passed"] = bool(abs(fit.k_fit - target) <= 0.10 * target)
    write_json(outdir / "report.json", report)
    return report


def cmd_certify(cfg: ExperimentConfig, outdir: Path,
                shift_path: Optional[str]) -> dict:
    reaction = _make_reaction(cfg)
    profile = solve_profile(reaction, cfg["profile.tol"])
    c = profile.c_star
    N = cfg["dimension.N"]
    system = cfg["certificate.system"]
    out: dict = {"system": system}

    if system == "310":
        params = cert_mod.CertificateParams(
            delta=cfg["certificate.delta"], gamma=cfg["certificate.gamma"],
            eta=cfg["certificate.eta"], C_const=cfg["certificate.C_const"],
            eps=cfg["certificate.eps"], T_start=cfg["certificate.T_start"],
            c_star=c, k_shift=(N - 1) / c, N_dim=N,
            F_lipschitz=cfg["certificate.F_lipschitz"])
        cert = cert_mod.integrate_system_310(params, cfg["certificate.t_final"])
        out["growth_exponent"] = cert.growth_exponent
        out["params"] = _params_echo(params)
    elif shift_path:
        gaps = derive_gap_constants(reaction, profile)
        table = read_csv(Path(shift_path))
        mol = cert_mod.mollify_shift(table["s_value"], cfg["certificate.eps"])
        params = cert_mod.supersolution_params(
            profile, gaps, mol, eps=cfg["certificate.eps"],
            T_start=max(cfg["certificate.T_start"], 1e7),
            eta=cfg["certificate.eta"], N_dim=N)
        cert = cert_mod.integrate_system_41(
            params, max(cfg["certificate.t_final"], 10 * params.T_start))
        rep = cert_mod.supersolution_residual(profile, gaps, mol, cert)
        out.update({
            "params": _params_echo(params),
            "envelope_pass": cert.envelope_pass, "K": cert.K,
            "residual_min": rep.residual_min,
            "condition_4_12_pass": rep.cond_412_pass,
            "condition_4_14_pass": rep.cond_414_pass,
        })
    else:
        params = cert_mod.CertificateParams(
            delta=cfg["certificate.delta"], gamma=cfg["certificate.gamma"],
            eta=cfg["certificate.eta"], C_const=cfg["certificate.C_const"],
            eps=cfg["certificate.eps"], T_start=cfg["certificate.T_start"],
            c_star=c, k_shift=(N - 1) / c, N_dim=N,
            F_lipschitz=cfg["certificate.F_lipschitz"])
        cert = cert_mod.integrate_system_41(params, cfg["certificate.t_final"])
        out["params"] = _params_echo(params)
        out["envelope_pass"] = cert.envelope_pass
        out["K"] = cert.K

    write_csv(outdir / "certificate.csv", ["t", "q", "xi"],
              [cert.times, cert.q_values, cert.xi_values])
    write_json(outdir / "cert.json", out)
    report = _report_skeleton(cfg, "certify")
    report["quantities"].update(
        {k: v for k, v in out.items() if not isinstance(v, dict)})
    if "envelope_pass" in out:
        report["passed"] = bool(out["envelope_pass"])
    write_json(outdir / "report.json", report)
    return report


def _params_echo(p: cert_mod.CertificateParams) -> dict:
    return {
        "delta": p.delta, "gamma": p.gamma, "eta": p.eta,
        "C_const": p.C_const, "eps": p.eps, "T_start": p.T_start,
        "c_star": p.c_star, "k_shift": p.k_shift, "N_dim": p.N_dim,
        "F_lipschitz": p.F_lipschitz,
    }


def cmd_report(cfg: ExperimentConfig, outdir: Path, fit_path: Optional[str],
               cert_path: Optional[str]) -> dict:
    """Aggregate fitted quantities against their targets; exit 4 on failure."""
    report = _report_skeleton(cfg, "report")
    checks = {}
    if fit_path:
        fit = json.loads(Path(fit_path).read_text())
        N = cfg["dimension.N"]
        c = fit["c_fit"]
        target = (N - 1) / c
        checks["k_fit"] = {
            "value": fit["k_fit"], "target": target, "rel_tol": 0.10,
            "passed": bool(abs(fit["k_fit"] - target) <= 0.10 * target),
        }
    if cert_path:
        cert = json.loads(Path(cert_path).read_text())
        if "envelope_pass" in cert:
            checks["envelope"] = {"passed": bool(cert["envelope_pass"])}
        if "residual_min" in cert:
            checks["supersolution"] = {
                "value": cert["residual_min"],
                "passed": bool(cert["residual_min"] >= -1e-8),
            }
    if not checks:
        raise ConfigError("report needs --fit and/or --cert inputs")
    report["quantities"] = checks
    report["passed"] = all(c["passed"] for c in checks.values())
    write_json(outdir / "report.json", report)
    return report


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON config file")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--threads", type=int, default=None,
                        help="max parallel experiments of a sweep (sweeps "
                             "run serially in this build; accepted for "
                             "interface compatibility)")

    ap = argparse.ArgumentParser(prog="frontlab",
                                 description=__doc__.splitlines()[0],
                                 parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p = add_parser("profile", help="solve the traveling wave")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)

    p = add_parser("simulate1d", help="radial or 1D moving-frame run")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--r1", type=float, default=None)
    p.add_argument("--r2", type=float, default=None)
    p.add_argument("--dr", type=float, default=None)
    p.add_argument("--t-final", type=float, default=None)
    p.add_argument("--frame", choices=("lab", "moving"), default=None)

    p = add_parser("simulate2d", help="polar moving-frame run (N=2)")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--shape", choices=("ellipse", "circle", "star"),
                   default=None)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--t-final", type=float, default=None)

    p = add_parser("fit", help="fit the logarithmic delay law")
    p.add_argument("--fronts", required=True)
    p.add_argument("--mode", choices=("full", "fixed_speed", "const"),
                   default=None)
    p.add_argument("--c-star", type=float, default=None)
    p.add_argument("--window-lo", type=float, default=None)
    p.add_argument("--window-hi", type=float, default=None)

    p = add_parser("certify", help="integrate a certificate system")
    p.add_argument("--system", choices=("41", "310"), default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--T-start", type=float, default=None)
    p.add_argument("--t-final", type=float, default=None)
    p.add_argument("--shift", default=None,
                   help="shift.csv enabling the supersolution grid check")

    p = add_parser("report", help="aggregate checks; exit 4 on failure")
    p.add_argument("--fit", default=None)
    p.add_argument("--cert", default=None)

    return ap


_FLAG_TO_KEY = {
    "theta": "nonlinearity.theta",
    "tol": "profile.tol",
    "dim": "dimension.N",
    "r1": "initial.R1",
    "r2": "initial.R2",
    "dr": "grid.dr",
    "t_final": "time.t_final",
    "frame": "grid.frame",
    "shape": "initial.shape",
    "a": "initial.a",
    "b": "initial.b",
    "m": "initial.m",
    "eps": "certificate.eps",
    "mode": "fit.mode",
    "window_lo": "fit.window_lo",
    "window_hi": "fit.window_hi",
    "system": "certificate.system",
    "T_start": "certificate.T_start",
    "threads": "output.threads",
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {}
        for flag, key in _FLAG_TO_KEY.items():
            if hasattr(args, flag) and getattr(args, flag) is not None:
                overrides[key] = getattr(args, flag)
        if args.command == "simulate2d" and args.eps is not None:
            overrides["initial.eps_shape"] = args.eps
        if args.command == "certify" and args.t_final is not None:
            overrides.pop("time.t_final", None)
            overrides["certificate.t_final"] = args.t_final
        cfg = parse_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        out_arg = args.out
        csv_override = None
        json_override = None
        if out_arg and out_arg.endswith(".csv") and args.command == "profile":
            csv_override = Path(out_arg)
            csv_override.parent.mkdir(parents=True, exist_ok=True)
            out_arg = str(csv_override.parent)
        if out_arg and out_arg.endswith(".json") and args.command == "fit":
            json_override = Path(out_arg)
            json_override.parent.mkdir(parents=True, exist_ok=True)
            out_arg = str(json_override.parent)
        outdir = _prepare_outdir(cfg, out_arg)

        if args.command == "profile":
            report = cmd_profile(cfg, outdir, csv_override)
        elif args.command == "simulate1d":
            report = cmd_simulate1d(cfg, outdir)
        elif args.command == "simulate2d":
            report = cmd_simulate2d(cfg, outdir)
        elif args.command == "fit":
            report = cmd_fit(cfg, outdir, args.fronts, args.c_star,
                             json_override)
        elif args.command == "certify":
            report = cmd_certify(cfg, outdir, args.shift)
        elif args.command == "report":
            report = cmd_report(cfg, outdir, args.fit, args.cert)
            if not report["passed"]:
                print("acceptance checks failed", file=sys.stderr)
                return EXIT_ACCEPTANCE
        else:  # pragma: no cover
            raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FrontLabError as exc:
        print(f"numerical failure in {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
