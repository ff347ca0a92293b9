"""Exception types shared across the toolkit."""


class EnergyEditError(Exception):
    """Base class for all toolkit errors."""


class InputError(EnergyEditError):
    """Raised when user-supplied data violates an operation's contract."""


class ContractError(EnergyEditError):
    """Raised when a caller violates an internal API contract (a bug, not bad data)."""


class CapabilityError(EnergyEditError):
    """Raised when an adapter lacks a capability an operation requires."""


class ExplosionGuardError(EnergyEditError):
    """Raised when exhaustive enumeration would exceed the hypothesis guard.

    Callers should fall back to beam search instead of retrying.
    """


class ConfigError(EnergyEditError):
    """Raised for invalid run configuration; message names the offending key."""


class TrainingDivergedError(EnergyEditError):
    """Raised when a training loss becomes non-finite."""
