class ContractViolation(ValueError):
    """An input broke a documented precondition (trace, norm, hermiticity...)."""


class CapacityError(RuntimeError):
    """A size guard was exceeded (dense dimension, Pauli-sum term count)."""
