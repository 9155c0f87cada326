class ParameterError(ValueError):
    """Argument outside the documented domain of an operation."""


class ContractError(RuntimeError):
    """Caller violated a sequencing contract (e.g. round/policy mismatch)."""


class RegimeError(ValueError):
    """Closed-form quantity is meaningless for the given (n, p)."""


class CapacityError(MemoryError):
    """Requested graph exceeds the configured edge cap."""
