"""Exception hierarchy shared by every module of the package."""


class SuperhedgeError(Exception):
    """Base class for all errors raised by :mod:`superhedge`."""


class LayoutMismatch(SuperhedgeError, ValueError):
    """State or position dimension inconsistent with the market model."""


class InvalidState(SuperhedgeError, ValueError):
    """A market state violates the invariants of its layout."""


class NonConvergent(SuperhedgeError, ArithmeticError):
    """A numerical liminf estimate kept oscillating across the schedule."""


class EmptySupport(SuperhedgeError):
    """A support model produced no successor for a reachable state."""


class LatticeExplosion(SuperhedgeError):
    """A lattice layer grew beyond the configured node cap."""


class NegativePayoff(SuperhedgeError, ValueError):
    """A payoff vector has a negative coordinate."""


class NotHedgeable(SuperhedgeError):
    """The hedging cost at the root is +infinity on the grid."""


class RadiusDegenerate(SuperhedgeError):
    """The sphere infimum vanished and no fallback radius was configured."""


class NotApplicable(SuperhedgeError):
    """A diagnostic was requested for a model that does not support it."""


class TooLarge(SuperhedgeError):
    """An enumeration instance exceeds its size caps."""


class ArbitrageParams(SuperhedgeError, ValueError):
    """Closed-form pricing parameters admit an arbitrage."""


class ConfigError(SuperhedgeError, ValueError):
    """A run configuration failed validation."""
