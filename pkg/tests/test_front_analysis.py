import math

import numpy as np
import pytest

from frontlab.errors import FitError, TrackingError, ValidationError
from frontlab.front_analysis import (FrontHistory, fit_log_shift,
                                     moving_frame_drift, to_moving_frame,
                                     track_level_set, verify_radial_sandwich)
from frontlab.wave_profile import profile_eval

C = 0.3535534
K = 2.8284271
S = 1.0


def synthetic_history(times, c=C, k=K, s=S, noise=None, rng=None):
    r = c * times - k * np.log(times) + s
    if noise is not None:
        r = r + rng.uniform(-noise, noise, size=times.size)
    return FrontHistory(times=times, positions=r, level=0.5)


def test_track_linear_interpolation():
    assert track_level_set(np.array([0.6, 0.4]), np.array([1.0, 2.0]),
                           0.5) == pytest.approx(1.5)


def test_track_exact_node():
    grid = np.array([0.0, 1.0, 2.0, 3.0])
    u = np.array([0.9, 0.5, 0.2, 0.1])
    assert track_level_set(u, grid, 0.5) == 1.0


def test_track_translation_equivariance():
    rng = np.random.default_rng(7)
    grid = np.linspace(0.0, 10.0, 200)
    u = 1.0 / (1.0 + np.exp(grid - 5.0)) + 0.01 * rng.standard_normal(200)
    x0 = track_level_set(u, grid, 0.5)
    x1 = track_level_set(u, grid + 3.25, 0.5)
    assert x1 - x0 == pytest.approx(3.25, abs=1e-12)


def test_track_errors():
    grid = np.linspace(0.0, 1.0, 11)
    with pytest.raises(TrackingError):
        track_level_set(np.full(11, 0.9), grid, 0.5)
    wiggly = np.array([0.9, 0.4, 0.7, 0.3, 0.2, 0.1, 0.05, 0.04, 0.03, 0.02,
                       0.01])
    with pytest.raises(TrackingError):
        track_level_set(wiggly, grid, 0.5)


def test_fit_full_mode_exact():
    t = np.arange(100.0, 1001.0, 100.0)
    fit = fit_log_shift(synthetic_history(t), mode="full", window=(0, 2000))
    assert fit.c_fit == pytest.approx(C, abs=1e-9)
    assert fit.k_fit == pytest.approx(K, abs=1e-9)
    assert fit.s_fit == pytest.approx(S, abs=1e-9)
    assert fit.residual_rms < 1e-10


def test_fit_fixed_speed_exact():
    t = np.arange(100.0, 1001.0, 100.0)
    fit = fit_log_shift(synthetic_history(t), mode="fixed_speed", c_star=C,
                        window=(0, 2000))
    assert fit.c_fit == C
    assert fit.k_fit == pytest.approx(K, abs=1e-9)
    assert fit.s_fit == pytest.approx(S, abs=1e-9)


def test_fit_exact_on_any_triple():
    rng = np.random.default_rng(3)
    for _ in range(20):
        t = np.sort(rng.uniform(10.0, 500.0, size=3))
        while np.unique(t).size < 3:
            t = np.sort(rng.uniform(10.0, 500.0, size=3))
        c, k, s = rng.uniform(0.1, 1.0), rng.uniform(0.5, 5.0), rng.uniform(-3, 3)
        h = synthetic_history(t, c=c, k=k, s=s)
        fit = fit_log_shift(h, mode="full", window=(1.0, 1e3))
        assert fit.c_fit == pytest.approx(c, abs=1e-9)
        assert fit.k_fit == pytest.approx(k, abs=1e-9)
        assert fit.s_fit == pytest.approx(s, abs=1e-9)


def test_fit_default_window_is_last_three_quarters():
    t = np.arange(10.0, 801.0, 10.0)
    fit = fit_log_shift(synthetic_history(t), mode="fixed_speed", c_star=C)
    assert fit.window == (200.0, 800.0)


def test_fit_noise_robustness():
    dr = 0.05
    rng = np.random.default_rng(11)
    t = np.arange(200.0, 801.0, 10.0)
    worst = 0.0
    for _ in range(10):
        h = synthetic_history(t, noise=dr, rng=rng)
        fit = fit_log_shift(h, mode="fixed_speed", c_star=C, window=(200, 800))
        worst = max(worst, abs(fit.k_fit - K))
    assert worst <= 10.0 * dr


def test_fit_rank_deficiency():
    t = np.array([50.0, 60.0])
    with pytest.raises(FitError):
        fit_log_shift(synthetic_history(t), mode="full", window=(0, 100))
    with pytest.raises(FitError):
        fit_log_shift(synthetic_history(np.array([50.0, 60.0, 70.0])),
                      mode="fixed_speed")  # c_star missing


def test_fit_const_control_mode():
    t = np.arange(100.0, 801.0, 10.0)
    fit = fit_log_shift(synthetic_history(t), mode="const", c_star=C,
                        window=(100, 800))
    assert fit.k_fit == 0.0
    log_fit = fit_log_shift(synthetic_history(t), mode="fixed_speed", c_star=C,
                            window=(100, 800))
    assert fit.residual_rms > 100.0 * log_fit.residual_rms


def test_history_validation():
    with pytest.raises(ValidationError):
        FrontHistory(times=np.array([1.0, 1.0, 2.0]),
                     positions=np.zeros(3), level=0.5)
    with pytest.raises(ValidationError):
        FrontHistory(times=np.array([1.0, 2.0]),
                     positions=np.array([1.0, np.inf]), level=0.5)


def test_drift_stationary():
    t = np.arange(100.0, 801.0, 10.0)
    h = FrontHistory(times=t, positions=np.full(t.size, 3.3), level=0.5,
                     frame="moving")
    rep = moving_frame_drift(h)
    assert rep.half_drift == pytest.approx(0.0, abs=1e-12)
    assert rep.window_drift == pytest.approx(0.0, abs=1e-12)
    assert rep.trend_slope == pytest.approx(0.0, abs=1e-12)


def test_drift_of_wrong_k_run():
    # Lab positions follow the true law; the k=0 frame sees -k ln t drift.
    t = np.arange(100.0, 801.0, 10.0)
    h = synthetic_history(t)
    hm = to_moving_frame(h, C, 0.0)
    rep = moving_frame_drift(hm, window=(100.0, 800.0))
    assert rep.half_drift == pytest.approx(-K * math.log(2.0), abs=1e-9)
    assert rep.window_drift == pytest.approx(-K * math.log(8.0), abs=1e-9)
    assert rep.trend_slope == pytest.approx(-K, abs=1e-9)


def test_to_moving_frame_correct_k_is_flat():
    t = np.arange(100.0, 801.0, 10.0)
    hm = to_moving_frame(synthetic_history(t), C, K)
    assert np.ptp(hm.positions) < 1e-12
    assert hm.frame == "moving"


class _Snap:
    frame = "moving"

    def __init__(self, t, r_grid, u, k_shift):
        self.t, self.r_grid, self.u, self.k_shift = t, r_grid, u, k_shift


def test_sandwich_exact_translate(profile):
    grid = np.arange(-25.0, 25.0 + 1e-9, 0.05)
    shift = 2.0
    snaps = [_Snap(t, grid, profile_eval(profile, grid - shift)[0],
                   1.0 / profile.c_star)
             for t in (50.0, 100.0, 200.0, 400.0)]
    rep = verify_radial_sandwich(snaps, profile)
    assert rep.s_plus == pytest.approx(shift, abs=1e-3)
    assert rep.s_minus == pytest.approx(shift, abs=1e-3)
    assert rep.stabilized
    assert rep.C < 1e-2


def test_sandwich_transient_exclusion(profile):
    grid = np.arange(-25.0, 25.0 + 1e-9, 0.05)
    snaps = [_Snap(t, grid, profile_eval(profile, grid)[0],
                   1.0 / profile.c_star)
             for t in (2.0, 5.0, 50.0, 100.0, 200.0, 400.0)]
    rep = verify_radial_sandwich(snaps, profile)
    assert rep.t0 >= 10.0
