"""Shared fixtures. The expensive simulation fixtures are session scoped and
lazy: only the tests that need them (acceptance, symmetry invariants) pay."""

import numpy as np
import pytest

from frontlab.nonlinearity import derive_gap_constants, make_cubic
from frontlab.wave_profile import solve_profile
from frontlab.front_analysis import FrontHistory
from frontlab import angular_solver as ang
from frontlab import radial_solver as rad

THETA = 0.25
C_EXACT = (1.0 - 2.0 * THETA) / np.sqrt(2.0)


@pytest.fixture(scope="session")
def cubic():
    return make_cubic(THETA)


@pytest.fixture(scope="session")
def profile(cubic):
    return solve_profile(cubic, 1e-8)


@pytest.fixture(scope="session")
def gaps(cubic, profile):
    return derive_gap_constants(cubic, profile)


def _staged_1d(state, t_final, snap_times, dt_cap=0.02):
    """Time-doubling segments at per-segment admissible fixed dt."""
    from dataclasses import replace
    snaps = [state]
    times, pos = [], []
    current = state
    while current.t < t_final - 1e-9:
        seg_end = min(max(2.0 * current.t, current.t + 1.0), t_final)
        probes = list(np.linspace(current.t, seg_end, 9))
        if current.k_shift > 0:
            t_star = current.k_shift / current.c_star
            if current.t < t_star < seg_end:
                probes.append(t_star)
        bound = min(rad.stability_dt(replace(current, t=tt)) for tt in probes)
        dt = min(0.85 * bound, dt_cap)
        res = rad.run(current, seg_end, snapshot_times=snap_times, dt=dt)
        current = res.snapshots[-1]
        snaps.extend(res.snapshots[1:])
        times.extend(res.history.times[1:] if times else res.history.times)
        pos.extend(res.history.positions[1:] if pos else res.history.positions)
    times, pos = np.asarray(times), np.asarray(pos)
    keep = np.concatenate([[True], np.diff(times) > 0])
    return snaps, FrontHistory(times[keep], pos[keep], 0.5)


@pytest.fixture(scope="session")
def run1d_n2(cubic, profile):
    """N=2 ball R1=10 in the moving frame, t = 1 .. 800."""
    grid = np.arange(4.0, 84.0 + 1e-9, 0.05)
    datum = rad.InitialDatum("ball_indicator", R1=10.0, R2=10.0)
    state = rad.build_initial(datum, grid, cubic, profile.c_star, N_dim=2,
                              frame="moving", t0=1.0)
    snaps, hist = _staged_1d(state, 800.0, np.arange(10.0, 801.0, 10.0))
    return {"snaps": snaps, "history": hist, "dr": 0.05}


@pytest.fixture(scope="session")
def run1d_n3(cubic, profile):
    """N=3 ball R1=20 in the moving frame, t = 1 .. 800."""
    grid = np.arange(11.0, 101.0 + 1e-9, 0.05)
    datum = rad.InitialDatum("ball_indicator", R1=20.0, R2=20.0)
    state = rad.build_initial(datum, grid, cubic, profile.c_star, N_dim=3,
                              frame="moving", t0=1.0)
    snaps, hist = _staged_1d(state, 800.0, np.arange(10.0, 801.0, 10.0))
    return {"snaps": snaps, "history": hist, "dr": 0.05}


@pytest.fixture(scope="session")
def run1d_k0(cubic, profile):
    """Deliberately wrong frame (k=0) from a settled front at t=100."""
    c = profile.c_star
    grid = np.arange(-20.0, 60.0 + 1e-9, 0.05)
    datum = rad.InitialDatum("profile_cap", R1=5.0 + c * 100.0,
                             R2=5.0 + c * 100.0)
    state = rad.build_initial(datum, grid, cubic, c, N_dim=2, frame="moving",
                              t0=100.0, k_shift=0.0, profile=profile)
    snaps, hist = _staged_1d(state, 800.0, np.arange(110.0, 801.0, 10.0))
    return {"snaps": snaps, "history": hist, "dr": 0.05}


@pytest.fixture(scope="session")
def system41_default(profile):
    from frontlab.certificates import CertificateParams, integrate_system_41
    c = profile.c_star
    params = CertificateParams(delta=1.0, gamma=1.0, eta=0.01, C_const=1.0,
                               eps=0.1, T_start=1e3, c_star=c,
                               k_shift=1.0 / c, N_dim=2)
    return integrate_system_41(params, 1.2e5)


@pytest.fixture(scope="session")
def supersolution_bundle(cubic, profile, gaps):
    """Full supersolution certificate against a synthetic Lipschitz shift."""
    from frontlab.certificates import (integrate_system_41, mollify_shift,
                                       supersolution_params,
                                       supersolution_residual)
    theta = np.arange(256) * (2 * np.pi / 256)
    mol = mollify_shift(25.0 + 3.0 * np.cos(2 * theta), 0.1)
    params = supersolution_params(profile, gaps, mol, eps=0.1)
    cert = integrate_system_41(params, 1e8)
    report = supersolution_residual(profile, gaps, mol, cert)
    return {"profile": profile, "gaps": gaps, "mollified": mol,
            "certificate": cert, "report": report}


@pytest.fixture(scope="session")
def run2d_ellipse(cubic, profile, gaps):
    """Ellipse a=30, b=20 in the moving frame to t=400, diagnostics every 25."""
    from dataclasses import replace
    grid = np.arange(10.0, 90.0 + 1e-9, 0.05)
    field = ang.build_initial_2d("ellipse", {"a": 30.0, "b": 20.0}, grid,
                                 cubic, profile.c_star, n_angles=256, t0=1.0)
    cadence = 25.0
    diag_t, diag_g, diag_s, diag_v = [], [], [], []
    shifts = []
    current = field
    while current.t < 400.0 - 1e-9:
        seg_end = min(max(2.0 * current.t, current.t + 1.0), 400.0)
        probes = list(np.linspace(current.t, seg_end, 9))
        t_star = current.k_shift / current.c_star
        if current.t < t_star < seg_end:
            probes.append(t_star)
        bound = min(ang.stability_dt_2d(replace(current, t=tt))
                    for tt in probes)
        cap = 0.02 if current.t < 100.0 else 0.04
        dt = min(0.85 * bound, cap)
        snap_times = np.arange(np.floor(current.t / cadence + 1) * cadence,
                               seg_end + 1e-9, cadence)
        res = ang.run_2d(current, seg_end, snapshot_times=snap_times, dt=dt,
                         level=0.5, profile=profile, slope_band_M=gaps.M,
                         keep_fields=1)
        d = res.diagnostics
        start = 1 if diag_t else 0
        diag_t.extend(d.times[start:])
        diag_g.extend(d.grad_theta_max[start:])
        diag_s.extend(d.sup_err_vs_shifted_wave[start:])
        diag_v.extend(d.min_V_window[start:])
        shifts.extend(res.shifts[start:])
        current = res.final
    return {
        "final": current,
        "times": np.asarray(diag_t),
        "grad_theta_max": np.asarray(diag_g),
        "sup_err": np.asarray(diag_s),
        "min_V": np.asarray(diag_v),
        "shifts": shifts,
        "dr": 0.05,
    }
