"""Exception and warning types shared across the package."""


class RelshockError(Exception):
    """Base class for all errors raised by this package."""


class NonFiniteValue(RelshockError):
    """A pointwise evaluation produced nan or inf."""


class ConvexityViolation(RelshockError):
    """Second derivative of the flux or entropy is not positive where required."""


class QuadratureFailure(RelshockError):
    """Adaptive quadrature did not converge to the requested tolerance."""


class DegenerateShock(RelshockError):
    """End states coincide; no shock connects them."""


class ProfileEscape(RelshockError):
    """Profile ODE solution left the open interval (u_plus, u_minus)."""


class IntegrationFailure(RelshockError):
    """ODE integrator failed to reach the requested endpoint."""


class InsufficientDomain(RelshockError):
    """Tabulated domain too short for the requested diagnostic."""


class ShiftOutOfRange(RelshockError):
    """Requested shift would drag boundary effects into the core window."""


class StepTooLarge(RelshockError):
    """Time step exceeds the CFL limit."""


class BlowUp(RelshockError):
    """PDE state became non-finite."""


class SignViolation(RelshockError):
    """A provably nonnegative functional evaluated significantly below zero."""


class InversionFailure(RelshockError):
    """Scalar root-finding for the truncated field did not converge."""


class ConfigError(RelshockError):
    """Experiment configuration failed validation."""


class TruncationWarning(UserWarning):
    """Integrand carries non-negligible mass at the domain endpoints."""
