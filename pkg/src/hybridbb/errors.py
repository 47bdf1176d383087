"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed instance, model or parameter."""


class BudgetError(InputError):
    """A request exceeds a size cap or a qubit budget is too small."""


class NumericalError(RuntimeError):
    """A numerical routine failed (e.g. a degenerate gap)."""
