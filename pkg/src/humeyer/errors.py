"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ContractError(ValueError):
    """Inputs violate a structural precondition (shapes, adjacency, lengths)."""


class CapacityError(MemoryError):
    """The requested object exceeds the configured size cap."""


class ConvergenceError(RuntimeError):
    """An iterative limit did not settle under its stopping rule."""
