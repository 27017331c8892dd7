"""Exception types shared across the package."""


class GamedynError(Exception):
    """Base class for package errors."""


class CapacityError(GamedynError):
    """An enumeration exceeded its configured state-space cap."""


class RejectedGameError(GamedynError):
    """The game violates the distinct-potential-neighbors assumption."""


class NumericError(GamedynError):
    """A numerical solve failed to reach its residual target."""


class ConfigError(GamedynError):
    """An experiment configuration is invalid."""
