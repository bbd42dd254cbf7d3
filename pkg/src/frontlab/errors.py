"""Exception hierarchy shared by all frontlab modules."""


class FrontLabError(Exception):
    """Base class for all frontlab errors."""


class ConfigError(FrontLabError):
    """Bad configuration: unknown key, type mismatch, invariant violation."""


class ValidationError(FrontLabError):
    """A domain object violates one of its declared invariants."""


class NoWaveError(FrontLabError):
    """Wave-speed bracketing failed: no traveling wave in the search range."""


class IntegrationError(FrontLabError):
    """An ODE or trajectory integration failed to complete."""


class StepSizeError(FrontLabError):
    """Requested time step violates the stability bound."""


class DomainError(FrontLabError):
    """Evaluation requested outside the physically valid domain."""


class TrackingError(FrontLabError):
    """Level-set crossing missing or ambiguous in the search band."""


class FitError(FrontLabError):
    """Regression problem is rank deficient or otherwise unsolvable."""


class SandwichError(FrontLabError):
    """No finite shift pair brackets the solution in the search window."""
