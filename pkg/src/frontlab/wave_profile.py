"""Traveling-wave profile U* and speed c* of the 1D bistable equation.

The profile solves the wave ODE

    U'' + c U' + f(U) = 0,    U(-inf) = 1,  U(+inf) = 0,

which admits a solution only at one speed c = c*. Solutions are unique up to
translation; the shift is fixed here by the pinning U*(0) = 1/2.

The solver shoots in the (U, W=U') phase plane from the unstable manifold of
the saddle (1, 0) and bisects on c: too small a speed overshoots (U crosses 0
with W < 0), too large a speed undershoots (W returns to 0 with U still
positive). For the cubic family f(u) = u(u-theta)(1-u) the exact answer is
U(xi) = (1 + exp(xi/sqrt(2)))^(-1) with c* = (1-2 theta)/sqrt(2), which the
test suite uses as its oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import DomainError, IntegrationError, NoWaveError, ValidationError
from .nonlinearity import BistableNonlinearity

C_BRACKET = (1e-6, 10.0)
GRID_HALF_WIDTH = 40.0
GRID_SPACING = 1e-2
_MANIFOLD_OFFSET = 1e-8
_TAIL_SWITCH = 1e-4   # |u| resp. |1-u| below which the analytic tail takes over
_XI_SPAN_MAX = 600.0


@dataclass(frozen=True)
class WaveProfile:
    """Tabulated traveling wave: speed, grid values, tails, pinning U*(0)=1/2.

    Immutable after solve; shareable across threads. ``tail_rates`` holds the
    positive exponential rates (nu_left, mu_right) with 1-U* ~ exp(+nu_left xi)
    as xi -> -inf and U* ~ exp(-mu_right xi) as xi -> +inf.
    """

    c_star: float
    xi_grid: np.ndarray
    u_values: np.ndarray
    du_values: np.ndarray
    tail_rates: tuple[float, float]
    pinning: float
    reaction: BistableNonlinearity

    def __post_init__(self):
        # Interpolants are derived data; cached lazily to keep the dataclass frozen.
        object.__setattr__(self, "_u_spline",
                           CubicHermiteSpline(self.xi_grid, self.u_values,
                                              self.du_values))
        object.__setattr__(self, "_du_spline", self._u_spline.derivative())


def _unstable_rate_at_one(f: BistableNonlinearity, c: float) -> float:
    fp1 = float(f.deriv(1.0))
    return 0.5 * (-c + math.sqrt(c * c - 4.0 * fp1))


def _decay_rate_at_zero(f: BistableNonlinearity, c: float) -> float:
    fp0 = float(f.deriv(0.0))
    return 0.5 * (c + math.sqrt(c * c - 4.0 * fp0))


def _shoot(f: BistableNonlinearity, c: float, rtol: float, dense: bool = False):
    """Integrate the phase plane from the unstable manifold of (1,0).

    Returns (kind, sol) with kind one of 'overshoot' (U reached 0 with W<0)
    or 'undershoot' (W returned to 0 with U>0).
    """
    lam = _unstable_rate_at_one(f, c)
    y0 = np.array([1.0 - _MANIFOLD_OFFSET, -_MANIFOLD_OFFSET * lam])
    # Both the manifold escape and the overdamped descent slow down like
    # 1/lam for large c, so the integration span must stretch with it.
    span = max(_XI_SPAN_MAX, 120.0 / lam)

    def rhs(xi, y):
        return (y[1], -c * y[1] - float(f.eval(y[0])))

    def hit_zero(xi, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1.0

    def turn_back(xi, y):
        return y[1]

    turn_back.terminal = True
    turn_back.direction = 1.0

    sol = solve_ivp(rhs, (0.0, span), y0, method="RK45",
                    events=(hit_zero, turn_back), rtol=rtol, atol=rtol * 1e-2,
                    dense_output=dense)
    if not sol.success:
        raise IntegrationError(f"phase-plane integration failed at c={c}: "
                               f"{sol.message}")
    if sol.t_events[0].size > 0:
        return "overshoot", sol
    if sol.t_events[1].size > 0:
        return "undershoot", sol
    # No event within the span: the overdamped trajectory was captured by the
    # stable node at (theta, 0), i.e. the wave stalled above the 0 state.
    # Near-bracket trajectories always classify quickly, so this only happens
    # for speeds well above c*.
    if abs(sol.y[0, -1] - f.theta) < 0.5 * (1.0 - f.theta):
        return "undershoot", sol
    raise IntegrationError(
        f"trajectory at c={c} reached xi={span} without classifying; "
        "non-monotone or stalled integration"
    )


def solve_profile(f: BistableNonlinearity, tol: float = 1e-6) -> WaveProfile:
    """Shoot for the wave speed and tabulate the pinned profile.

    ``tol`` is the termination width of the c-bisection, required inside
    (1e-12, 1e-4). The tabulation pass privately refines the bracket further
    so that the trajectory tracks the connecting orbit well past the
    tail-switch depth; the reported c_star honors the requested tol.
    """
    if not 1e-12 < tol < 1e-4:
        raise ValidationError(f"tol must lie in (1e-12, 1e-4); got {tol}")
    # Stepping tolerance: absolute tol/100; relative no looser than 1e-6.
    # Integration bias enters the classified speed well below tol.
    rtol = min(max(tol, 1e-9), 1e-6)

    c_lo, c_hi = C_BRACKET
    kind_lo, _ = _shoot(f, c_lo, rtol)
    kind_hi, _ = _shoot(f, c_hi, rtol)
    if kind_lo != "overshoot" or kind_hi != "undershoot":
        raise NoWaveError(
            f"no overshoot/undershoot bracket in c in [{c_lo}, {c_hi}]: "
            f"got ({kind_lo}, {kind_hi}); is f bistable with positive mass?"
        )

    while c_hi - c_lo > tol:
        c_mid = 0.5 * (c_lo + c_hi)
        kind, _ = _shoot(f, c_mid, rtol)
        if kind == "overshoot":
            c_lo = c_mid
        else:
            c_hi = c_mid
    c_star = 0.5 * (c_lo + c_hi)

    # Refine privately so the tabulation trajectory stays on the connection
    # down to the tail switch; without this the orbit peels off near the
    # saddle at (0,0) at depths comparable to the bracket width. These passes
    # run at a tighter stepping tolerance: the integrator's bias acts like an
    # effective speed perturbation and would otherwise dominate the bracket.
    r_lo, r_hi = c_lo, c_hi
    rtol_fine = min(rtol, 1e-8)
    while r_hi - r_lo > 1e-10:
        c_mid = 0.5 * (r_lo + r_hi)
        kind, _ = _shoot(f, c_mid, rtol_fine)
        if kind == "overshoot":
            r_lo = c_mid
        else:
            r_hi = c_mid
    c_fine = 0.5 * (r_lo + r_hi)

    _, sol = _shoot(f, c_fine, 1e-12, dense=True)
    traj = sol.sol
    xi_end = sol.t[-1]

    def u_of(xi):
        return traj(xi)[0]

    # Locate pinning and the two tail-switch stations on the trajectory.
    samples = np.linspace(0.0, xi_end, 4096)
    u_samp = traj(samples)[0]

    def locate(level: float) -> float:
        idx = np.flatnonzero((u_samp[:-1] > level) & (u_samp[1:] <= level))
        if idx.size == 0:
            raise IntegrationError(f"trajectory never crosses u={level}")
        i = idx[0]
        return brentq(lambda x: u_of(x) - level, samples[i], samples[i + 1],
                      xtol=1e-13)

    xi_half = locate(0.5)
    xi_left_switch = locate(1.0 - _TAIL_SWITCH)
    xi_right_switch = locate(_TAIL_SWITCH)

    nu_left = _unstable_rate_at_one(f, c_fine)
    mu_right = _decay_rate_at_zero(f, c_fine)

    n = int(round(GRID_HALF_WIDTH / GRID_SPACING))
    xi_grid = np.arange(-n, n + 1) * GRID_SPACING
    u = np.empty_like(xi_grid)
    du = np.empty_like(xi_grid)

    s = xi_grid + xi_half          # trajectory coordinate of each node
    mid = (s >= xi_left_switch) & (s <= xi_right_switch)
    vals = traj(s[mid])
    u[mid], du[mid] = vals[0], vals[1]

    # Analytic exponential tails, matched continuously at the switch stations.
    uL, wL = traj(xi_left_switch)
    aL = (1.0 - uL)                 # 1-U = aL * exp(nu (s - switch))
    left = s < xi_left_switch
    eL = np.exp(nu_left * (s[left] - xi_left_switch))
    u[left] = 1.0 - aL * eL
    du[left] = -nu_left * aL * eL

    uR, wR = traj(xi_right_switch)
    right = s > xi_right_switch
    eR = np.exp(-mu_right * (s[right] - xi_right_switch))
    u[right] = uR * eR
    du[right] = -mu_right * uR * eR

    profile = WaveProfile(c_star=float(c_star), xi_grid=xi_grid, u_values=u,
                          du_values=du, tail_rates=(nu_left, mu_right),
                          pinning=0.5, reaction=f)
    _check_profile(profile)
    return profile


def _check_profile(p: WaveProfile) -> None:
    if not (p.u_values[0] > 1.0 - 1e-6 and p.u_values[-1] < 1e-6):
        raise ValidationError("profile grid does not span (1e-6, 1-1e-6)")
    if np.any(np.diff(p.u_values) >= 0.0):
        raise ValidationError("profile values are not strictly decreasing")
    if np.any(p.du_values >= 0.0):
        raise ValidationError("profile slope is not everywhere negative")
    i0 = np.searchsorted(p.xi_grid, 0.0)
    if abs(p.u_values[i0] - p.pinning) > 1e-10:
        raise ValidationError("pinning U*(0)=1/2 violated")


def profile_eval(p: WaveProfile, xi) -> tuple:
    """Evaluate (U*, U*', U*'') at xi; scalar in, scalars out (arrays likewise).

    Cubic Hermite interpolation inside the grid, analytic exponential tails
    outside. The second derivative uses the wave ODE identity
    U*'' = -c* U*' - f(U*).
    """
    xi_arr = np.asarray(xi, dtype=float)
    scalar = xi_arr.ndim == 0
    xi_arr = np.atleast_1d(xi_arr)
    u = np.empty_like(xi_arr)
    du = np.empty_like(xi_arr)

    lo, hi = p.xi_grid[0], p.xi_grid[-1]
    inside = (xi_arr >= lo) & (xi_arr <= hi)
    if np.any(inside):
        u[inside] = p._u_spline(xi_arr[inside])
        du[inside] = p._du_spline(xi_arr[inside])

    nu, mu = p.tail_rates
    left = xi_arr < lo
    if np.any(left):
        aL = 1.0 - p.u_values[0]
        eL = np.exp(nu * (xi_arr[left] - lo))
        u[left] = 1.0 - aL * eL
        du[left] = -nu * aL * eL
    right = xi_arr > hi
    if np.any(right):
        aR = p.u_values[-1]
        eR = np.exp(-mu * (xi_arr[right] - hi))
        u[right] = aR * eR
        du[right] = -mu * aR * eR

    ddu = -p.c_star * du - np.asarray(p.reaction.eval(u), dtype=float)
    if scalar:
        return float(u[0]), float(du[0]), float(ddu[0])
    return u, du, ddu


def profile_inverse(p: WaveProfile, level: float) -> float:
    """Unique xi with U*(xi) = level, for level in [1e-6, 1-1e-6]."""
    if not 1e-6 <= level <= 1.0 - 1e-6:
        raise DomainError(f"level {level} outside [1e-6, 1-1e-6]")
    lo, hi = p.xi_grid[0], p.xi_grid[-1]
    xi = brentq(lambda x: profile_eval(p, x)[0] - level, lo, hi, xtol=1e-13)
    if abs(profile_eval(p, xi)[0] - level) > 1e-10:
        raise DomainError(f"inverse residual exceeds 1e-10 at level {level}")
    return float(xi)
