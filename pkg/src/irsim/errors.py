"""Exception types shared across the simulator."""


class IrsimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(IrsimError):
    """Invalid configuration value or unknown config key."""


class RankDeficientError(IrsimError):
    """Channel matrix has no full row rank; ZF precoding is undefined.

    Carries the condition estimate (largest/smallest singular value) so callers
    can log how bad the instance was.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class DegenerateChannelError(IrsimError):
    """No usable eigen-directions (all eigenvalues below the rank tolerance)."""


class QoSInfeasibleError(IrsimError):
    """The per-user rate floors cannot be met within the power budget."""

    def __init__(self, message, required=None, budget=None):
        super().__init__(message)
        self.required = required
        self.budget = budget


class AssociationInfeasibleError(IrsimError):
    """Some user has no feasible BS (or some BS no feasible user)."""


class OracleTooLargeError(IrsimError):
    """Brute-force enumeration bound exceeded."""
