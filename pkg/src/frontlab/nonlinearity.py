"""Bistable reaction terms and the spectral-gap constants derived from them.

A reaction term f on [0,1] is bistable when

    f(0) = f(theta) = f(1) = 0,   f < 0 on (0,theta),   f > 0 on (theta,1),
    f'(0) < 0,  f'(1) < 0,        and   int_0^1 f(u) du > 0.

The positive mass makes the 1D traveling wave move toward the u=0 state.
The canonical member is the cubic f(u) = u(u-theta)(1-u) with theta in
(0, 1/2), for which every quantity below has a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, TYPE_CHECKING

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .errors import ValidationError

if TYPE_CHECKING:
    from .wave_profile import WaveProfile

_SIGN_SAMPLES = 1000


@dataclass(frozen=True)
class BistableNonlinearity:
    """Reaction term f with its derivatives and Lipschitz bound on [0,1].

    Immutable after construction; safe to share across threads.
    """

    theta: float
    eval: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    deriv2: Callable[[np.ndarray], np.ndarray]
    f_lipschitz: float
    kind: str

    def __call__(self, u):
        return self.eval(u)


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of one bistability condition: pass flag plus measured margin."""

    name: str
    passed: bool
    margin: float


@dataclass(frozen=True)
class ValidationReport:
    """Four sign/integral conditions checked on a candidate reaction term."""

    conditions: tuple[ConditionReport, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def condition(self, name: str) -> ConditionReport:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)


@dataclass(frozen=True)
class GapConstants:
    """Spectral-gap constants attached to a reaction term and its wave profile.

    delta   : gap with f'(u) <= -delta on the end bands [0,mu0] u [1-mu0,1]
    mu0     : half-width of those bands, mu0 in (0, min(theta,1-theta))
    M       : half-width of the transition window, U*(rho) leaves the bands
              only for |rho| < M
    delta_M : slope floor, -U*' >= delta_M on [-M, M]
    """

    mu0: float
    delta: float
    M: float
    delta_M: float


def make_cubic(theta: float) -> BistableNonlinearity:
    """Cubic bistable term f(u) = u(u-theta)(1-u) with exact zeros {0,theta,1}.

    Requires theta in (0, 1/2): at theta = 1/2 the mass int_0^1 f = (1-2theta)/12
    vanishes and no rightward wave exists.
    """
    if not 0.0 < theta < 0.5:
        raise ValidationError(
            f"theta must lie in (0, 1/2); got {theta} "
            "(positive-mass condition int f > 0 fails at theta = 1/2)"
        )

    def f(u):
        return u * (u - theta) * (1.0 - u)

    def fp(u):
        return -3.0 * u * u + 2.0 * (1.0 + theta) * u - theta

    def fpp(u):
        return -6.0 * u + 2.0 * (1.0 + theta)

    # |f'| attains its max on [0,1] at an endpoint or at the vertex of f'.
    vertex = (1.0 + theta) / 3.0
    candidates = [0.0, 1.0, vertex]
    lip = max(abs(fp(u)) for u in candidates)
    return BistableNonlinearity(
        theta=theta, eval=f, deriv=fp, deriv2=fpp, f_lipschitz=lip, kind="cubic"
    )


def make_tabulated(u_samples: np.ndarray, f_samples: np.ndarray) -> BistableNonlinearity:
    """Bistable term from (u, f) samples via a C2 piecewise-cubic interpolant.

    Derivatives come from the interpolant, not from finite differences of the
    raw samples. The samples must cover [0,1] and carry a sign change from
    negative to positive at some interior theta.
    """
    u_samples = np.asarray(u_samples, dtype=float)
    f_samples = np.asarray(f_samples, dtype=float)
    if u_samples.ndim != 1 or u_samples.shape != f_samples.shape:
        raise ValidationError("u and f samples must be matching 1D arrays")
    if u_samples[0] > 1e-12 or u_samples[-1] < 1.0 - 1e-12:
        raise ValidationError("samples must cover [0, 1]")
    if np.any(np.diff(u_samples) <= 0):
        raise ValidationError("u samples must be strictly increasing")

    spline = CubicSpline(u_samples, f_samples)
    dspline = spline.derivative()
    d2spline = spline.derivative(2)

    # Unstable zero: the interior sign change from f<0 to f>0.
    uu = np.linspace(0.0, 1.0, 4001)[1:-1]
    vals = spline(uu)
    crossings = np.flatnonzero((vals[:-1] < 0) & (vals[1:] >= 0))
    if crossings.size != 1:
        raise ValidationError(
            f"expected one negative-to-positive crossing, found {crossings.size}"
        )
    i = crossings[0]
    # Linear interpolation of the crossing; good enough for a tag value.
    t0, t1, v0, v1 = uu[i], uu[i + 1], vals[i], vals[i + 1]
    theta = float(t0 - v0 * (t1 - t0) / (v1 - v0))
    lip = float(np.max(np.abs(dspline(np.linspace(0.0, 1.0, 4001)))))
    return BistableNonlinearity(
        theta=theta,
        eval=spline,
        deriv=dspline,
        deriv2=d2spline,
        f_lipschitz=lip,
        kind="user-tabulated",
    )


def validate(f: BistableNonlinearity) -> ValidationReport:
    """Check the four bistability conditions; failures are reported, not raised.

    Margins: most negative violation distance per condition (positive margin
    means the condition holds with room to spare).
    """
    theta = f.theta
    zero_tol = 1e-12 if f.kind != "cubic" else 0.0

    lo = np.linspace(0.0, theta, _SIGN_SAMPLES + 2)[1:-1]
    hi = np.linspace(theta, 1.0, _SIGN_SAMPLES + 2)[1:-1]
    flo = np.asarray(f.eval(lo), dtype=float)
    fhi = np.asarray(f.eval(hi), dtype=float)

    zeros_err = max(abs(float(f.eval(0.0))), abs(float(f.eval(theta))),
                    abs(float(f.eval(1.0))))
    cond_zeros = ConditionReport(
        "zeros at {0, theta, 1}", zeros_err <= max(zero_tol, 1e-12), -zeros_err
    )
    cond_signs = ConditionReport(
        "f<0 on (0,theta) and f>0 on (theta,1)",
        bool(np.all(flo < 0.0) and np.all(fhi > 0.0)),
        float(min(np.min(-flo), np.min(fhi))),
    )
    dp0 = float(f.deriv(0.0))
    dp1 = float(f.deriv(1.0))
    cond_slopes = ConditionReport(
        "f'(0)<0 and f'(1)<0", dp0 < 0.0 and dp1 < 0.0, -max(dp0, dp1)
    )
    # Composite Simpson with a refinement-based error estimate.
    u_fine = np.linspace(0.0, 1.0, 4097)
    mass = float(simpson(np.asarray(f.eval(u_fine), dtype=float), x=u_fine))
    mass_coarse = float(simpson(np.asarray(f.eval(u_fine[::2]), dtype=float),
                                x=u_fine[::2]))
    quad_err = abs(mass - mass_coarse)
    cond_mass = ConditionReport(
        "int_0^1 f > 0", mass > 1e-10 and quad_err < 1e-10, mass
    )
    return ValidationReport((cond_zeros, cond_signs, cond_slopes, cond_mass))


def derive_gap_constants(f: BistableNonlinearity, profile: "WaveProfile",
                         mu0_floor: float = 1e-3) -> GapConstants:
    """Derive (mu0, delta, M, delta_M) from a validated f and its solved profile.

    delta is half the weaker endpoint slope, min(-f'(0), -f'(1))/2: the theory
    only needs some positive gap, and halving keeps the bands robust under
    discretization. mu0 is then the largest band half-width, capped at
    min(theta, 1-theta)/2, on which f' <= -delta holds (bisection, 1e-6
    resolution). M is minimal with U*(rho) inside the bands for |rho| >= M,
    and delta_M is the slope floor of the profile on [-M, M].
    """
    if np.any(profile.du_values >= 0.0):
        raise ValidationError("profile is not strictly decreasing")

    theta = f.theta
    delta = 0.5 * min(-float(f.deriv(0.0)), -float(f.deriv(1.0)))
    if delta <= 0.0:
        raise ValidationError("endpoint slopes must be negative")

    cap = 0.5 * min(theta, 1.0 - theta)

    def bands_ok(mu: float) -> bool:
        band = np.linspace(0.0, mu, 257)
        left = np.asarray(f.deriv(band), dtype=float)
        right = np.asarray(f.deriv(1.0 - band), dtype=float)
        return bool(np.all(left <= -delta) and np.all(right <= -delta))

    if not bands_ok(mu0_floor):
        raise ValidationError(
            f"no admissible band of width >= {mu0_floor}: spectral gap too thin"
        )
    lo, hi = mu0_floor, cap
    if bands_ok(cap):
        mu0 = cap
    else:
        while hi - lo > 1e-6:
            mid = 0.5 * (lo + hi)
            if bands_ok(mid):
                lo = mid
            else:
                hi = mid
        mu0 = lo

    # Smallest M with U*(+-M) already inside the end bands; the profile is
    # monotone so a bisection on each side suffices.
    from .wave_profile import profile_eval, profile_inverse

    m_right = profile_inverse(profile, mu0)
    m_left = -profile_inverse(profile, 1.0 - mu0)
    M = max(m_right, m_left)

    rho = np.linspace(-M, M, 2001)
    slopes = np.array([-profile_eval(profile, x)[1] for x in rho])
    delta_M = float(np.min(slopes))
    if delta_M <= 0.0:
        raise ValidationError("profile slope floor is not positive on [-M, M]")
    return GapConstants(mu0=float(mu0), delta=float(delta), M=float(M),
                        delta_M=delta_M)
