"""Full moving-frame solver on (r, Theta) in window x S^1 for N = 2.

The equation in the frame moving like R(t) = c* t - k ln t, k = 1/c*:

    u_t = u_rr + [c* + 1/(r + R(t)) - k/t] u_r + u_ThetaTheta/(r + R(t))^2
          + f(u),

periodic in Theta, Dirichlet u=1/u=0 at the radial window edges. The angular
Laplacian is the plain second Theta-derivative on the unit circle. Its
coefficient decays like t^-2, so it is integrated explicitly; radial
diffusion is implicit (one batched tridiagonal solve per step), drift and
reaction are explicit with the drift coefficient taken at the step midpoint.

The run driver records, per snapshot, the diagnostics feeding the
angle-dependent front analysis: max |u_Theta| (boundedness of the angular
derivative), the per-angle front shift s(Theta) with its Lipschitz estimate,
the sup-distance to the shifted wave U*(r + s(Theta)), and the radial-slope
floor min(-u_r) on the transition band.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import DomainError, StepSizeError, TrackingError, ValidationError
from .front_analysis import track_level_set
from .nonlinearity import BistableNonlinearity
from .radial_solver import CFL_SAFETY, CLAMP_TOL, OVERSHOOT_TOL, REACTION_DT_CAP
from .wave_profile import WaveProfile, profile_eval, profile_inverse

DEFAULT_ANGLES = 256
FRONT_BAND_HALF_WIDTH = 20.0


@dataclass(frozen=True)
class PolarField:
    """One time slice on the (Theta, r) grid; u has shape (J, I)."""

    t: float
    r_grid: np.ndarray
    theta_grid: np.ndarray
    u: np.ndarray
    c_star: float
    k_shift: float
    reaction: BistableNonlinearity

    def __post_init__(self):
        r = np.asarray(self.r_grid, dtype=float)
        th = np.asarray(self.theta_grid, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if np.any(np.diff(r) <= 0) or np.ptp(np.diff(r)) > 1e-9 * (r[1] - r[0]):
            raise ValidationError("r_grid must be uniform and increasing")
        J = th.size
        expected = 2.0 * math.pi / J
        if np.any(np.abs(np.diff(th) - expected) > 1e-9) or abs(th[0]) > 1e-12:
            raise ValidationError("theta_grid must be J uniform angles from 0")
        if u.shape != (J, r.size):
            raise ValidationError(f"u must have shape (J, I) = ({J}, {r.size})")
        object.__setattr__(self, "r_grid", r)
        object.__setattr__(self, "theta_grid", th)
        object.__setattr__(self, "u", u)

    @property
    def dr(self) -> float:
        return float(self.r_grid[1] - self.r_grid[0])

    @property
    def dtheta(self) -> float:
        return 2.0 * math.pi / self.theta_grid.size

    @property
    def frame_offset(self) -> float:
        return self.c_star * self.t - self.k_shift * math.log(self.t)

    def physical_radii(self, t: Optional[float] = None) -> np.ndarray:
        tt = self.t if t is None else t
        return self.r_grid + self.c_star * tt - self.k_shift * math.log(tt)

    # Diagnostics are derived fields, never evolved independently.
    @cached_property
    def V(self) -> np.ndarray:
        """-du/dr, centered in the interior, one-sided at the window edges."""
        u, dr = self.u, self.dr
        v = np.empty_like(u)
        v[:, 1:-1] = -(u[:, 2:] - u[:, :-2]) / (2.0 * dr)
        v[:, 0] = -(u[:, 1] - u[:, 0]) / dr
        v[:, -1] = -(u[:, -1] - u[:, -2]) / dr
        return v

    @cached_property
    def u_theta(self) -> np.ndarray:
        """du/dTheta by centered periodic differences."""
        u = self.u
        return (np.roll(u, -1, axis=0) - np.roll(u, 1, axis=0)) / (2.0 * self.dtheta)

    @cached_property
    def u_thetatheta(self) -> np.ndarray:
        """Laplace-Beltrami on S^1: second periodic Theta-difference."""
        u = self.u
        return (np.roll(u, -1, axis=0) - 2.0 * u + np.roll(u, 1, axis=0)) \
            / self.dtheta ** 2


@dataclass(frozen=True)
class AngularShift:
    """Per-angle front offset s(Theta) in the moving frame."""

    theta_grid: np.ndarray
    s_values: np.ndarray
    lipschitz_estimate: float


@dataclass(frozen=True)
class Diagnostics2D:
    """Per-snapshot scalars of a 2D run."""

    times: np.ndarray
    grad_theta_max: np.ndarray
    sup_err_vs_shifted_wave: np.ndarray
    min_V_window: np.ndarray


@dataclass(frozen=True)
class Run2DResult:
    final: PolarField
    diagnostics: Diagnostics2D
    shifts: tuple              # AngularShift per snapshot
    snapshot_fields: tuple     # sparse subset of PolarField snapshots


def support_radius(shape: str, params: dict, theta: np.ndarray) -> np.ndarray:
    """Boundary radius R(Theta) of the supported region."""
    if shape in ("ellipse", "circle"):
        a, b = float(params["a"]), float(params.get("b", params["a"]))
        return a * b / np.sqrt((b * np.cos(theta)) ** 2
                               + (a * np.sin(theta)) ** 2)
    if shape == "star":
        rbar = float(params["rbar"])
        m = int(params["m"])
        eps = float(params["eps"])
        if abs(eps) >= 1.0:
            raise ValidationError("star modulation needs |eps| < 1")
        return rbar * (1.0 + eps * np.cos(m * theta))
    raise ValidationError(f"unknown support shape {shape!r}")


def support_bounds(shape: str, params: dict) -> tuple[float, float]:
    """(R1, R2) with B_R1 inside the support inside B_R2."""
    if shape in ("ellipse", "circle"):
        a, b = float(params["a"]), float(params.get("b", params["a"]))
        return min(a, b), max(a, b)
    rbar, eps = float(params["rbar"]), float(params["eps"])
    return rbar * (1.0 - abs(eps)), rbar * (1.0 + abs(eps))


def build_initial_2d(shape: str, params: dict, r_grid: np.ndarray,
                     reaction: BistableNonlinearity, c_star: float,
                     n_angles: int = DEFAULT_ANGLES, t0: float = 1.0,
                     smoothing: float = 0.0,
                     k_shift: Optional[float] = None) -> PolarField:
    """Indicator (optionally smoothed) of the support, in the moving frame.

    The support boundary R(Theta) lives in physical radii; the field is
    sampled at r_phys = r + R(t0).
    """
    r_grid = np.asarray(r_grid, dtype=float)
    theta = np.arange(n_angles) * (2.0 * math.pi / n_angles)
    if k_shift is None:
        k_shift = 1.0 / c_star
    R1, R2 = support_bounds(shape, params)
    if R1 <= 0.0:
        raise ValidationError("support must contain a ball of positive radius")
    offset = c_star * t0 - k_shift * math.log(t0)
    r_phys = r_grid + offset
    if r_phys[0] <= 0.0:
        raise DomainError(
            f"window left edge at physical radius {r_phys[0]:.3f} <= 0 at t={t0}"
        )
    Rb = support_radius(shape, params, theta)
    if np.any(Rb < R1 - 1e-9) or np.any(Rb > R2 + 1e-9):
        raise ValidationError("support escapes its sandwich bounds")
    if smoothing > 0.0:
        s = np.clip((r_phys[None, :] - Rb[:, None]) / (2.0 * smoothing) + 0.5,
                    0.0, 1.0)
        u = 1.0 - s * s * (3.0 - 2.0 * s)
    else:
        u = np.where(r_phys[None, :] < Rb[:, None], 1.0, 0.0)
        dr = r_grid[1] - r_grid[0]
        cut = np.abs(r_phys[None, :] - Rb[:, None]) <= 0.5 * dr
        u = np.where(cut, 0.5, u)
    u[:, 0], u[:, -1] = 1.0, 0.0
    return PolarField(t=t0, r_grid=r_grid, theta_grid=theta, u=u,
                      c_star=c_star, k_shift=k_shift, reaction=reaction)


def _drift_2d(field: PolarField, t_mid: float) -> np.ndarray:
    r_phys = field.physical_radii(t_mid)
    return field.c_star + 1.0 / r_phys - field.k_shift / t_mid


def _angular_coef(field: PolarField, t_mid: float) -> np.ndarray:
    return 1.0 / field.physical_radii(t_mid) ** 2


def stability_dt_2d(field: PolarField) -> float:
    """min(0.9 dr/|a|max, 1.8/F, 0.9 dTheta^2 / (2 max 1/r_phys^2))."""
    a_max = float(np.max(np.abs(_drift_2d(field, field.t))))
    coef_max = float(np.max(_angular_coef(field, field.t)))
    bounds = [REACTION_DT_CAP / field.reaction.f_lipschitz,
              CFL_SAFETY * field.dtheta ** 2 / (2.0 * coef_max)]
    if a_max > 0:
        bounds.append(CFL_SAFETY * field.dr / a_max)
    return float(min(bounds))


def monotone_dt_2d(field: PolarField) -> float:
    """Sufficient bound for exact order preservation, see radial_solver."""
    a_max = float(np.max(np.abs(_drift_2d(field, field.t))))
    coef_max = float(np.max(_angular_coef(field, field.t)))
    head = 1.0 - 0.5 * a_max * field.dr
    if head <= 0.0:
        raise StepSizeError("no order-preserving step on this grid")
    F = field.reaction.f_lipschitz
    denom = F + a_max / field.dr + 2.0 * coef_max / field.dtheta ** 2
    return float(0.95 * head / denom)


def step_2d(field: PolarField, dt: float) -> PolarField:
    """One IMEX step: implicit radial diffusion, everything else explicit."""
    if field.t < 1.0:
        raise ValidationError("moving-frame time starts at t=1")
    t_mid = field.t + 0.5 * dt
    t_new = field.t + dt
    for tt in (field.t, t_mid, t_new):
        if field.r_grid[0] + field.c_star * tt - field.k_shift * math.log(tt) <= 0.0:
            raise DomainError(
                f"window left edge reaches nonpositive physical radius at t={tt}"
            )
    if dt > stability_dt_2d(field) * (1.0 + 1e-12):
        raise StepSizeError(
            f"dt={dt} exceeds the stability bound {stability_dt_2d(field):.3e}"
        )

    u, dr = field.u, field.dr
    a = _drift_2d(field, t_mid)[None, :]
    coef = _angular_coef(field, t_mid)[None, :]

    rhs = u + dt * (coef * field.u_thetatheta
                    + np.asarray(field.reaction.eval(u), dtype=float))
    rhs[:, 1:-1] += dt * a[:, 1:-1] * (u[:, 2:] - u[:, :-2]) / (2.0 * dr)

    mu = dt / (dr * dr)
    n = u.shape[1] - 2
    ab = np.empty((3, n))
    ab[0, :] = -mu
    ab[1, :] = 1.0 + 2.0 * mu
    ab[2, :] = -mu
    B = rhs[:, 1:-1].T.copy()
    B[0, :] += mu * 1.0          # Dirichlet u=1 at the left window edge
    interior = solve_banded((1, 1), ab, B, overwrite_ab=True, overwrite_b=True,
                            check_finite=False)

    new = np.empty_like(u)
    new[:, 1:-1] = interior.T
    new[:, 0], new[:, -1] = 1.0, 0.0
    lo, hi = float(np.min(new)), float(np.max(new))
    if lo < -OVERSHOOT_TOL or hi > 1.0 + OVERSHOOT_TOL:
        raise ValidationError(
            f"step_2d at t={field.t:.3f}: solution left [0,1] "
            f"(min {lo:.3e}, max {hi:.3e})"
        )
    new = np.clip(new, -CLAMP_TOL, 1.0 + CLAMP_TOL)
    return replace(field, t=t_new, u=new)


def angular_gradient_max(field: PolarField) -> float:
    """max |dU/dTheta| over the window part with r >= -c* t / 2."""
    mask = field.r_grid >= -0.5 * field.c_star * field.t
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(field.u_theta[:, mask])))


def _front_band(field: PolarField, level: float) -> tuple[float, float]:
    """Search band around the angle-averaged front position."""
    mean_u = np.mean(field.u, axis=0)
    center = track_level_set(mean_u, field.r_grid, level)
    lo = max(center - FRONT_BAND_HALF_WIDTH, float(field.r_grid[0]))
    hi = min(center + FRONT_BAND_HALF_WIDTH, float(field.r_grid[-1]))
    return lo, hi


def extract_angular_shift(field: PolarField, level: float,
                          profile: WaveProfile,
                          band: Optional[tuple[float, float]] = None
                          ) -> AngularShift:
    """Per-angle crossing x_level(Theta) and shift s(Theta) = U*^-1(level) - x.

    With level = 1/2 and the pinning U*(0) = 1/2 this is s = -x_{1/2}. The
    Lipschitz estimate is the max one-sided difference quotient, wraparound
    included.
    """
    if band is None:
        band = _front_band(field, level)
    xi_level = profile_inverse(profile, level)
    s = np.empty(field.theta_grid.size)
    for j in range(field.theta_grid.size):
        try:
            x = track_level_set(field.u[j], field.r_grid, level, band=band)
        except TrackingError as exc:
            raise TrackingError(
                f"angle index {j} (Theta={field.theta_grid[j]:.4f}): {exc}"
            ) from exc
        s[j] = xi_level - x
    ds = np.abs(np.diff(np.concatenate([s, s[:1]])))
    lip = float(np.max(ds) / field.dtheta)
    return AngularShift(theta_grid=field.theta_grid, s_values=s,
                        lipschitz_estimate=lip)


def sup_error_vs_shifted_wave(field: PolarField, shift: AngularShift,
                              profile: WaveProfile) -> float:
    """sup over the grid of |u - U*(r + s(Theta))|."""
    rho = field.r_grid[None, :] + shift.s_values[:, None]
    wave = profile_eval(profile, rho.ravel())[0].reshape(rho.shape)
    return float(np.max(np.abs(field.u - wave)))


def min_slope_on_band(field: PolarField, shift: AngularShift,
                      M: float) -> float:
    """min of -du/dr over the transition band |r + s(Theta)| <= M."""
    rho = field.r_grid[None, :] + shift.s_values[:, None]
    mask = np.abs(rho) <= M
    if not np.any(mask):
        raise DomainError("transition band misses the window")
    return float(np.min(field.V[mask]))


def run_2d(field: PolarField, t_final: float,
           snapshot_times: Optional[Sequence[float]] = None,
           dt: Optional[float] = None, level: float = 0.5,
           profile: Optional[WaveProfile] = None,
           slope_band_M: Optional[float] = None,
           keep_fields: int = 2) -> Run2DResult:
    """Advance with fixed dt; per snapshot record diagnostics and the shift.

    ``keep_fields`` caps how many full snapshots are retained (first/last
    biased) to bound memory; scalar diagnostics are kept for every snapshot.
    """
    if t_final < field.t:
        raise ValidationError("t_final precedes the field time")
    if dt is None:
        dt = 0.9 * stability_dt_2d(field)
    n_steps = max(1, math.ceil((t_final - field.t) / dt))
    dt_eff = (t_final - field.t) / n_steps if n_steps else dt

    wanted = sorted(snapshot_times) if snapshot_times is not None else []
    wanted = [tw for tw in wanted if field.t < tw <= t_final + 1e-9]

    times, grads, sups, minvs, shifts = [], [], [], [], []
    first_field: Optional[PolarField] = None
    tail_fields: deque = deque(maxlen=max(1, keep_fields - 1))

    def record(fld: PolarField):
        nonlocal first_field
        times.append(fld.t)
        grads.append(angular_gradient_max(fld))
        if profile is not None:
            sh = extract_angular_shift(fld, level, profile)
            shifts.append(sh)
            sups.append(sup_error_vs_shifted_wave(fld, sh, profile))
            if slope_band_M is not None:
                minvs.append(min_slope_on_band(fld, sh, slope_band_M))
            else:
                minvs.append(float(np.min(fld.V)))
        else:
            shifts.append(None)
            sups.append(math.nan)
            minvs.append(math.nan)
        if first_field is None:
            first_field = fld
        else:
            tail_fields.append(fld)

    record(field)
    current = field
    next_idx = 0
    for _ in range(n_steps):
        current = step_2d(current, dt_eff)
        while next_idx < len(wanted) and current.t >= wanted[next_idx] - 1e-9:
            record(current)
            next_idx += 1
    if times[-1] < current.t:
        record(current)

    if keep_fields <= 1 and tail_fields:
        snapshot_fields = (tail_fields[-1],)
    else:
        snapshot_fields = tuple([first_field] + list(tail_fields))

    diag = Diagnostics2D(times=np.asarray(times),
                         grad_theta_max=np.asarray(grads),
                         sup_err_vs_shifted_wave=np.asarray(sups),
                         min_V_window=np.asarray(minvs))
    return Run2DResult(final=current, diagnostics=diag, shifts=tuple(shifts),
                       snapshot_fields=snapshot_fields)
