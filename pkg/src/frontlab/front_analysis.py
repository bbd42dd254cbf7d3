"""Front tracking and the logarithmic delay law r(t) = c t - k ln t + s.

Level-set positions are extracted by linear interpolation between grid nodes;
the law is fitted by ordinary least squares, either jointly in (c, k, s) or
with the wave speed pinned to c* (the well-conditioned headline mode: over any
finite window ln t is nearly collinear with the constant, so fitting c and k
together is ill-posed; the delay d(t) = c* t - r(t) regressed on {ln t, 1}
isolates k cleanly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import FitError, SandwichError, TrackingError, ValidationError
from .wave_profile import WaveProfile, profile_eval

TRANSIENT_CUTOFF = 10.0      # sandwich diagnostics discard t below this
SANDWICH_SHIFT_WINDOW = 20.0  # +- search range for the shift pair
_FRONT_BAND = (1e-3, 1.0 - 1e-3)


@dataclass(frozen=True)
class FrontHistory:
    """Tracked level-set radii over time (lab frame unless stated otherwise)."""

    times: np.ndarray
    positions: np.ndarray
    level: float
    angle_index: Optional[int] = None
    frame: str = "lab"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        if t.ndim != 1 or t.shape != x.shape:
            raise ValidationError("times and positions must be matching 1D arrays")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("times must be strictly increasing")
        if not np.all(np.isfinite(x)):
            raise ValidationError("positions must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)


@dataclass(frozen=True)
class FrontFit:
    """Least-squares coefficients of the law r(t) = c t - k ln t + s."""

    c_fit: float
    k_fit: float
    s_fit: float
    residual_rms: float
    window: tuple[float, float]
    mode: str


@dataclass(frozen=True)
class DriftReport:
    """Stationarity diagnostics of moving-frame front positions."""

    half_drift: float      # x(t_hi) - x(t_hi/2)
    window_drift: float    # x(t_hi) - x(t_lo)
    trend_slope: float     # OLS slope of x against ln t over the window
    window: tuple[float, float]


@dataclass(frozen=True)
class SandwichReport:
    """Tight shift pair s- < s+ squeezing the run between profile translates."""

    s_plus: float
    s_minus: float
    C: float
    stabilized: bool
    t0: float
    times: np.ndarray
    s_plus_t: np.ndarray
    s_minus_t: np.ndarray

    @property
    def width(self) -> float:
        return self.s_plus - self.s_minus


def track_level_set(u: np.ndarray, grid: np.ndarray, level: float,
                    band: Optional[tuple[float, float]] = None) -> float:
    """Position of the unique monotone crossing of ``level`` on the grid.

    Linear interpolation between the bracketing nodes; an exact node hit
    returns that node's coordinate. Zero or multiple crossings in the search
    band raise a tracking error.
    """
    u = np.asarray(u, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if band is not None:
        mask = (grid >= band[0]) & (grid <= band[1])
        u, grid = u[mask], grid[mask]
    if u.size < 2:
        raise TrackingError("search band holds fewer than two nodes")

    d = u - level
    exact = np.flatnonzero(d == 0.0)
    strict = np.flatnonzero(d[:-1] * d[1:] < 0.0)
    n_cross = exact.size + strict.size
    if n_cross == 0:
        raise TrackingError(f"no crossing of level {level} in the search band")
    if n_cross > 1:
        raise TrackingError(
            f"{n_cross} crossings of level {level} in the search band; "
            "front is not monotone there"
        )
    if exact.size:
        return float(grid[exact[0]])
    i = strict[0]
    w = d[i] / (d[i] - d[i + 1])
    return float(grid[i] + w * (grid[i + 1] - grid[i]))


def fit_log_shift(h: FrontHistory, mode: str = "fixed_speed",
                  c_star: Optional[float] = None,
                  window: Optional[tuple[float, float]] = None) -> FrontFit:
    """Fit r(t) = c t - k ln t + s on the window (default last three quarters).

    mode='full' regresses r on {t, -ln t, 1}; mode='fixed_speed' pins c = c*
    and regresses the delay d(t) = c* t - r(t) on {ln t, 1}; mode='const'
    is the control fit of the delay on {1} alone (no log term).
    """
    if mode not in ("full", "fixed_speed", "const"):
        raise FitError(f"unknown fit mode {mode!r}")
    if mode in ("fixed_speed", "const") and c_star is None:
        raise FitError(f"mode {mode!r} requires c_star")

    t_all, r_all = h.times, h.positions
    if window is None:
        window = (t_all[-1] / 4.0, t_all[-1])
    mask = (t_all >= window[0]) & (t_all <= window[1])
    t, r = t_all[mask], r_all[mask]

    needed = {"full": 3, "fixed_speed": 2, "const": 1}[mode]
    if np.unique(t).size < needed:
        raise FitError(
            f"window {window} holds {np.unique(t).size} distinct times; "
            f"{mode} mode needs at least {needed} (rank-deficient design)"
        )

    log_t = np.log(t)
    if mode == "full":
        X = np.column_stack([t, -log_t, np.ones_like(t)])
        beta, *_ = np.linalg.lstsq(X, r, rcond=None)
        resid = r - X @ beta
        c_fit, k_fit, s_fit = (float(b) for b in beta)
    else:
        d = c_star * t - r
        if mode == "fixed_speed":
            X = np.column_stack([log_t, np.ones_like(t)])
            beta, *_ = np.linalg.lstsq(X, d, rcond=None)
            resid = d - X @ beta
            c_fit, k_fit, s_fit = float(c_star), float(beta[0]), float(-beta[1])
        else:
            mean_d = float(np.mean(d))
            resid = d - mean_d
            c_fit, k_fit, s_fit = float(c_star), 0.0, -mean_d

    rms = float(np.sqrt(np.mean(resid ** 2)))
    return FrontFit(c_fit=c_fit, k_fit=k_fit, s_fit=s_fit, residual_rms=rms,
                    window=(float(window[0]), float(window[1])), mode=mode)


def to_moving_frame(h: FrontHistory, c_star: float, k: float) -> FrontHistory:
    """Convert lab-frame positions to the frame moving like c* t - k ln t."""
    offset = c_star * h.times - k * np.log(h.times)
    return FrontHistory(times=h.times, positions=h.positions - offset,
                        level=h.level, angle_index=h.angle_index,
                        frame="moving")


def moving_frame_drift(h: FrontHistory,
                       window: Optional[tuple[float, float]] = None) -> DriftReport:
    """Drift of moving-frame positions: near zero iff the frame has the right k.

    Reports x(t_hi) - x(t_hi/2), the full-window drift x(t_hi) - x(t_lo), and
    the OLS trend slope of x against ln t (a run with k off by dk drifts with
    slope -dk in this variable).
    """
    t, x = h.times, h.positions
    if window is None:
        window = (float(t[0]), float(t[-1]))
    mask = (t >= window[0]) & (t <= window[1])
    t, x = t[mask], x[mask]
    if t.size < 3:
        raise FitError("drift report needs at least three samples in the window")

    t_hi = t[-1]

    def at(time: float) -> float:
        return float(np.interp(time, t, x))

    log_t = np.log(t)
    X = np.column_stack([log_t, np.ones_like(t)])
    beta, *_ = np.linalg.lstsq(X, x, rcond=None)
    return DriftReport(
        half_drift=at(t_hi) - at(t_hi / 2.0),
        window_drift=at(t_hi) - float(x[0]),
        trend_slope=float(beta[0]),
        window=(float(t[0]), float(t_hi)),
    )


def _moving_coordinates(snapshot, c_star: float, k: float) -> np.ndarray:
    x = np.asarray(snapshot.r_grid, dtype=float)
    if getattr(snapshot, "frame", "moving") == "lab":
        x = x - (c_star * snapshot.t - k * math.log(snapshot.t))
    return x


def verify_radial_sandwich(snapshots: Sequence, profile: WaveProfile,
                           k: Optional[float] = None) -> SandwichReport:
    """Tight per-time shifts s+-(t) and fitted constant C for the squeeze

        U*(x - s-) - C ln t / t  <=  u(t, x)  <=  U*(x - s+) + C ln t / t

    in the moving coordinate x = r - (c* t - k ln t). The asymptotic pair
    (s-, s+) is read off the last half of the run; C is then the smallest
    constant absorbing every remaining excess, including the plateaus where
    the profile translate alone cannot dominate the solution.
    """
    snaps = [s for s in snapshots if s.t >= TRANSIENT_CUTOFF]
    if not snaps:
        raise SandwichError(
            f"no snapshots at t >= {TRANSIENT_CUTOFF}; run is all transient"
        )
    c_star = profile.c_star
    if k is None:
        k = getattr(snaps[-1], "k_shift")

    # Vectorized inverse of the monotone profile for the front band.
    u_tab = profile.u_values[::-1]
    xi_tab = profile.xi_grid[::-1]

    times, sp_t, sm_t = [], [], []
    for s in snaps:
        x = _moving_coordinates(s, c_star, k)
        u = np.asarray(s.u, dtype=float)
        band = (u > _FRONT_BAND[0]) & (u < _FRONT_BAND[1])
        if not np.any(band):
            raise SandwichError(f"no front band in snapshot at t={s.t}")
        xi_of_u = np.interp(u[band], u_tab, xi_tab)
        shifts = x[band] - xi_of_u
        s_hi, s_lo = float(np.max(shifts)), float(np.min(shifts))
        if max(abs(s_hi), abs(s_lo)) > SANDWICH_SHIFT_WINDOW:
            raise SandwichError(
                f"shift {max(abs(s_hi), abs(s_lo)):.2f} escapes the "
                f"+-{SANDWICH_SHIFT_WINDOW} search window at t={s.t}"
            )
        times.append(s.t)
        sp_t.append(s_hi)
        sm_t.append(s_lo)

    times = np.asarray(times)
    sp_t = np.asarray(sp_t)
    sm_t = np.asarray(sm_t)
    last = times >= 0.5 * times[-1]
    s_plus = float(np.max(sp_t[last]))
    s_minus = float(np.min(sm_t[last]))
    stabilized = (float(np.ptp(sp_t[last])) < 0.1
                  and float(np.ptp(sm_t[last])) < 0.1)

    C = 0.0
    for s in snaps:
        x = _moving_coordinates(s, c_star, k)
        u = np.asarray(s.u, dtype=float)
        upper = profile_eval(profile, x - s_plus)[0]
        lower = profile_eval(profile, x - s_minus)[0]
        scale = s.t / math.log(s.t)
        C = max(C,
                float(np.max((u - upper)) * scale),
                float(np.max((lower - u)) * scale))
    C = max(C, 0.0)

    return SandwichReport(s_plus=s_plus, s_minus=s_minus, C=C,
                          stabilized=stabilized, t0=float(times[0]),
                          times=times, s_plus_t=sp_t, s_minus_t=sm_t)
