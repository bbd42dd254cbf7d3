"""Desk-scale laboratory for logarithmically delayed bistable fronts.

Compactly supported data for u_t = Lap u + f(u) with bistable f spread at
the wave speed c*, with the front radius obeying

    r(t) = c* t - ((N-1)/c*) ln t + s(direction) + o(1).

The package solves the 1D wave profile by shooting, integrates the radial
and polar moving-frame equations, fits the delay law, and verifies the
comparison-function certificates behind it.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, DomainError, FitError, FrontLabError,
                     IntegrationError, NoWaveError, SandwichError,
                     StepSizeError, TrackingError, ValidationError)
from .nonlinearity import (BistableNonlinearity, GapConstants,
                           derive_gap_constants, make_cubic, make_tabulated,
                           validate)
from .wave_profile import (WaveProfile, profile_eval, profile_inverse,
                           solve_profile)

__all__ = [
    "BistableNonlinearity", "GapConstants", "WaveProfile",
    "make_cubic", "make_tabulated", "validate", "derive_gap_constants",
    "solve_profile", "profile_eval", "profile_inverse",
    "FrontLabError", "ConfigError", "ValidationError", "NoWaveError",
    "IntegrationError", "StepSizeError", "DomainError", "TrackingError",
    "FitError", "SandwichError",
    "__version__",
]
