"""Radially symmetric solver: lab frame on [0, r_max] and 1D moving frame.

Lab frame (r = |x|, dimension N >= 2):

    u_t = u_rr + (N-1)/r u_r + f(u),   Neumann at r=0, Dirichlet u=0 at r_max.

Moving frame (x = r - R(t), R(t) = c* t - k ln t, k = (N-1)/c*):

    u_t = u_xx + [c* + (N-1)/(x + R(t)) - k/t] u_x + f(u),

on a fixed window with Dirichlet u=1 at the left edge and u=0 at the right
edge; the window must keep x + R(t) > 0 (positive physical radius) throughout
a run. Note R(t) dips to k(1 - ln(k/c*)) at t = k/c*, which is negative for
k/c* > e, so windows for runs that start early must sit right of the origin.

Time stepping is IMEX: second-order central diffusion implicit (tridiagonal
solve), drift (centered differences, coefficient at the step midpoint) and
reaction explicit, first order in time. The implicit factor is an M-matrix,
so the scheme is order preserving whenever the explicit factor is; the
``monotone_dt`` bound below is sufficient for that, and the looser
``stability_dt`` bound is the hard cap enforced by the steppers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import DomainError, StepSizeError, ValidationError
from .front_analysis import FrontHistory, track_level_set
from .nonlinearity import BistableNonlinearity
from .wave_profile import WaveProfile, profile_eval

CLAMP_TOL = 1e-8
OVERSHOOT_TOL = 1e-6
CFL_SAFETY = 0.9
REACTION_DT_CAP = 1.8


@dataclass(frozen=True)
class InitialDatum:
    """Compactly supported datum squeezed between the balls B_R1 and B_R2."""

    kind: str                  # ball_indicator | smoothed_ball | profile_cap
    R1: float
    R2: float
    width: float = 0.0

    def __post_init__(self):
        if self.kind not in ("ball_indicator", "smoothed_ball", "profile_cap"):
            raise ValidationError(f"unknown initial datum kind {self.kind!r}")
        if not 0.0 < self.R1 <= self.R2:
            raise ValidationError("need 0 < R1 <= R2")
        if self.kind == "smoothed_ball":
            if self.R1 == self.R2:
                raise ValidationError("smoothed_ball needs R1 < R2")
            if not 0.0 < self.width <= 0.5 * (self.R2 - self.R1):
                raise ValidationError("width must lie in (0, (R2-R1)/2]")


@dataclass(frozen=True)
class RadialState:
    """One time slice of the radial solution; immutable, freely shareable."""

    frame: str                 # lab | moving
    t: float
    r_grid: np.ndarray
    u: np.ndarray
    N_dim: int
    c_star: float
    k_shift: float
    reaction: BistableNonlinearity

    def __post_init__(self):
        if self.frame not in ("lab", "moving"):
            raise ValidationError(f"unknown frame {self.frame!r}")
        if self.N_dim < 1:
            raise ValidationError("N_dim must be >= 1")
        r = np.asarray(self.r_grid, dtype=float)
        dr = np.diff(r)
        if r.size < 3 or np.any(dr <= 0) or np.ptp(dr) > 1e-9 * dr[0]:
            raise ValidationError("r_grid must be uniform and increasing")
        u = np.asarray(self.u, dtype=float)
        if u.shape != r.shape:
            raise ValidationError("u and r_grid shapes differ")
        object.__setattr__(self, "r_grid", r)
        object.__setattr__(self, "u", u)

    @property
    def dr(self) -> float:
        return float(self.r_grid[1] - self.r_grid[0])

    @property
    def frame_offset(self) -> float:
        """R(t) = c* t - k ln t in the moving frame, 0 in the lab frame."""
        if self.frame == "lab":
            return 0.0
        return self.c_star * self.t - self.k_shift * math.log(self.t)

    def physical_radii(self, t: Optional[float] = None) -> np.ndarray:
        if self.frame == "lab":
            return self.r_grid
        tt = self.t if t is None else t
        return self.r_grid + self.c_star * tt - self.k_shift * math.log(tt)


@dataclass(frozen=True)
class RunResult:
    snapshots: tuple
    history: FrontHistory


def standard_k(N_dim: int, c_star: float) -> float:
    return (N_dim - 1) / c_star


def datum_values(datum: InitialDatum, r_phys: np.ndarray,
                 profile: Optional[WaveProfile] = None) -> np.ndarray:
    """Evaluate the datum on physical radii; values in [0, 1]."""
    r = np.asarray(r_phys, dtype=float)
    if datum.kind == "ball_indicator":
        dr = r[1] - r[0] if r.size > 1 else 0.0
        u = np.where(r < datum.R1, 1.0, 0.0)
        cut = np.abs(r - datum.R1) <= 0.5 * dr
        u[cut] = 0.5
        return u
    if datum.kind == "smoothed_ball":
        mid = 0.5 * (datum.R1 + datum.R2)
        # C1 smoothstep from 1 to 0 across [mid-width, mid+width].
        s = np.clip((r - (mid - datum.width)) / (2.0 * datum.width), 0.0, 1.0)
        return 1.0 - s * s * (3.0 - 2.0 * s)
    # profile_cap: U*(r - R1) plus an optional bump of height ``width`` on
    # B_{R2+1}, capped at 1.
    if profile is None:
        raise ValidationError("profile_cap datum needs a solved profile")
    u = profile_eval(profile, r - datum.R1)[0]
    if datum.width > 0.0:
        u = u + datum.width * (r < datum.R2 + 1.0)
    return np.minimum(u, 1.0)


def check_datum_sandwich(u: np.ndarray, r_phys: np.ndarray, R1: float,
                         R2: float) -> None:
    """Pointwise 1_{B_R1} <= u <= 1_{B_R2}, half-cell tolerant at the cuts."""
    r = np.asarray(r_phys, dtype=float)
    dr = r[1] - r[0] if r.size > 1 else 0.0
    lower = np.where(r <= R1 - 0.5 * dr, 1.0, 0.0)
    upper = np.where(r >= R2 + 0.5 * dr, 0.0, 1.0)
    if np.any(u < lower - 1e-12) or np.any(u > upper + 1e-12):
        raise ValidationError("datum violates the ball sandwich")
    if np.any(u < -1e-12) or np.any(u > 1.0 + 1e-12):
        raise ValidationError("datum leaves [0, 1]")


def build_initial(datum: InitialDatum, grid: np.ndarray,
                  reaction: BistableNonlinearity, c_star: float,
                  N_dim: int = 2, frame: str = "lab", t0: float = 1.0,
                  k_shift: Optional[float] = None,
                  profile: Optional[WaveProfile] = None) -> RadialState:
    """State at the initial time (t=1 by convention, later for window starts).

    The datum lives on physical radii; in the moving frame the grid holds
    window coordinates and the datum is evaluated at x + R(t0).
    """
    grid = np.asarray(grid, dtype=float)
    if k_shift is None:
        k_shift = standard_k(N_dim, c_star)
    state = RadialState(frame=frame, t=t0, r_grid=grid,
                        u=np.zeros_like(grid), N_dim=N_dim, c_star=c_star,
                        k_shift=k_shift, reaction=reaction)
    r_phys = state.physical_radii()
    if frame == "moving" and r_phys[0] <= 0.0:
        raise DomainError(
            f"window left edge at physical radius {r_phys[0]:.3f} <= 0 at t={t0}"
        )
    if frame == "lab" and datum.R2 >= grid[-1]:
        raise ValidationError("datum support reaches the outer boundary")
    u = datum_values(datum, r_phys, profile=profile)
    if datum.kind != "profile_cap":
        check_datum_sandwich(u, r_phys, datum.R1, datum.R2)
    if frame == "moving":
        u = u.copy()
        u[0], u[-1] = 1.0, 0.0
    return replace(state, u=u)


def _drift_coefficients(state: RadialState, t_mid: float) -> np.ndarray:
    """Drift velocity per node at the step midpoint time."""
    curv = _curvature_strength(state)
    if state.frame == "lab":
        a = np.zeros_like(state.r_grid)
        # Symmetry gives u_r(0) = 0; the axis node carries no drift.
        a[1:] = curv / state.r_grid[1:]
        return a
    r_phys = state.physical_radii(t_mid)
    return state.c_star + curv / r_phys - state.k_shift / t_mid


def _curvature_strength(state: RadialState) -> float:
    # Separate hook so tests can exercise dimension overrides.
    return float(state.N_dim - 1)


def _max_drift(state: RadialState, t_mid: Optional[float] = None) -> float:
    if t_mid is None:
        t_mid = state.t
    return float(np.max(np.abs(_drift_coefficients(state, t_mid))))


def stability_dt(state: RadialState) -> float:
    """Hard step cap min(0.9 dr/|c_max|, 1.8/F) enforced by the steppers."""
    c_max = _max_drift(state)
    dr_term = CFL_SAFETY * state.dr / c_max if c_max > 0 else np.inf
    return float(min(dr_term, REACTION_DT_CAP / state.reaction.f_lipschitz))


def monotone_dt(state: RadialState) -> float:
    """Sufficient step bound for exact order preservation of the IMEX map.

    Writing the explicit factor as alpha (I - dt D2) + B with
    alpha = |a|_max dr / 2, every entry of B is nonnegative when

        dt (F + |a|_max / dr) <= 1 - |a|_max dr / 2,

    which makes the whole step a nonnegative operator.
    """
    a_max = _max_drift(state)
    head = 1.0 - 0.5 * a_max * state.dr
    if head <= 0.0:
        raise StepSizeError(
            "no order-preserving step exists: |a| dr / 2 >= 1 on this grid"
        )
    F = state.reaction.f_lipschitz
    return float(0.95 * head / (F + a_max / state.dr))


def _solve_tridiagonal(dt: float, dr: float, rhs: np.ndarray,
                       neumann_left: bool) -> np.ndarray:
    """Solve (I - dt D2) v = rhs with the requested left closure.

    The rightmost node is Dirichlet and excluded by the caller. With a
    Neumann left end the axis node sees the reflected ghost, otherwise the
    left node is Dirichlet and likewise excluded.
    """
    mu = dt / (dr * dr)
    n = rhs.size
    ab = np.empty((3, n))
    ab[0, :] = -mu
    ab[1, :] = 1.0 + 2.0 * mu
    ab[2, :] = -mu
    if neumann_left:
        ab[0, 1] = -2.0 * mu
    return solve_banded((1, 1), ab, rhs, overwrite_ab=True, overwrite_b=True,
                        check_finite=False)


def _clamp(u: np.ndarray, where: str) -> np.ndarray:
    lo, hi = float(np.min(u)), float(np.max(u))
    if lo < -OVERSHOOT_TOL or hi > 1.0 + OVERSHOOT_TOL:
        raise ValidationError(
            f"{where}: solution left [0,1] by more than {OVERSHOOT_TOL} "
            f"(min {lo:.3e}, max {hi:.3e})"
        )
    return np.clip(u, -CLAMP_TOL, 1.0 + CLAMP_TOL)


def step_lab(state: RadialState, dt: float) -> RadialState:
    """One IMEX step of the lab-frame equation."""
    if state.frame != "lab":
        raise ValidationError("step_lab needs a lab-frame state")
    if dt > stability_dt(state) * (1.0 + 1e-12):
        raise StepSizeError(
            f"dt={dt} exceeds the stability bound {stability_dt(state):.3e}"
        )
    u, dr = state.u, state.dr
    a = _drift_coefficients(state, state.t + 0.5 * dt)

    du = np.zeros_like(u)
    du[1:-1] = (u[2:] - u[:-2]) / (2.0 * dr)   # centered; zero at the axis
    rhs = u + dt * (a * du + np.asarray(state.reaction.eval(u), dtype=float))

    interior = rhs[:-1].copy()                  # Dirichlet u=0 at r_max
    new = np.empty_like(u)
    new[:-1] = _solve_tridiagonal(dt, dr, interior, neumann_left=True)
    new[-1] = 0.0
    new = _clamp(new, f"step_lab at t={state.t:.3f}")
    return replace(state, t=state.t + dt, u=new)


def step_moving(state: RadialState, dt: float) -> RadialState:
    """One IMEX step of the moving-frame equation (drift at the midpoint)."""
    if state.frame != "moving":
        raise ValidationError("step_moving needs a moving-frame state")
    if state.t < 1.0:
        raise ValidationError("moving-frame time starts at t=1")
    t_mid = state.t + 0.5 * dt
    t_new = state.t + dt
    for tt in (state.t, t_mid, t_new):
        if state.r_grid[0] + state.c_star * tt - state.k_shift * math.log(tt) <= 0.0:
            raise DomainError(
                f"window left edge reaches nonpositive physical radius at t={tt}"
            )
    if dt > stability_dt(state) * (1.0 + 1e-12):
        raise StepSizeError(
            f"dt={dt} exceeds the stability bound {stability_dt(state):.3e}"
        )
    u, dr = state.u, state.dr
    a = _drift_coefficients(state, t_mid)

    du = np.zeros_like(u)
    du[1:-1] = (u[2:] - u[:-2]) / (2.0 * dr)
    rhs = u + dt * (a * du + np.asarray(state.reaction.eval(u), dtype=float))

    # Dirichlet u=1 left, u=0 right: the left value enters the first interior
    # node's implicit stencil through the right-hand side.
    mu = dt / (dr * dr)
    interior = rhs[1:-1].copy()
    interior[0] += mu * 1.0
    new = np.empty_like(u)
    new[1:-1] = _solve_tridiagonal(dt, dr, interior, neumann_left=False)
    new[0], new[-1] = 1.0, 0.0
    new = _clamp(new, f"step_moving at t={state.t:.3f}")
    return replace(state, t=t_new, u=new)


def run(state: RadialState, t_final: float,
        snapshot_times: Optional[Sequence[float]] = None,
        dt: Optional[float] = None, level: float = 0.5,
        track_band: Optional[tuple[float, float]] = None) -> RunResult:
    """Advance with fixed dt, collect snapshots, track the level-set front.

    Front positions are recorded in the lab frame (moving-frame crossings are
    shifted back by R(t)), so the history feeds the delay fit directly.
    """
    if t_final < state.t:
        raise ValidationError("t_final precedes the state time")
    if t_final == state.t:
        hist = _history_from([state], level, track_band)
        return RunResult(snapshots=(state,), history=hist)

    if dt is None:
        dt = 0.9 * stability_dt(state)
    n_steps = max(1, math.ceil((t_final - state.t) / dt))
    dt_eff = (t_final - state.t) / n_steps

    wanted = sorted(snapshot_times) if snapshot_times is not None else []
    wanted = [tw for tw in wanted if state.t < tw <= t_final + 1e-9]

    stepper = step_lab if state.frame == "lab" else step_moving
    snaps = [state]
    current = state
    next_idx = 0
    for _ in range(n_steps):
        current = stepper(current, dt_eff)
        while next_idx < len(wanted) and current.t >= wanted[next_idx] - 1e-9:
            snaps.append(current)
            next_idx += 1
    if snaps[-1] is not current:
        snaps.append(current)

    hist = _history_from(snaps, level, track_band)
    return RunResult(snapshots=tuple(snaps), history=hist)


def _history_from(snaps: Sequence[RadialState], level: float,
                  band: Optional[tuple[float, float]]) -> FrontHistory:
    times, positions = [], []
    for s in snaps:
        pos = track_level_set(s.u, s.r_grid, level, band=band)
        times.append(s.t)
        positions.append(pos + s.frame_offset)
    # Duplicate times can occur when a snapshot request lands on the final
    # state; strictly increasing times are required downstream.
    times = np.asarray(times)
    positions = np.asarray(positions)
    keep = np.concatenate([[True], np.diff(times) > 0])
    return FrontHistory(times=times[keep], positions=positions[keep],
                        level=level)
