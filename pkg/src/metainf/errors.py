"""Exception taxonomy; the CLI maps these onto exit codes."""


class MetaInfError(Exception):
    """Base class for all package errors."""


class DataError(MetaInfError):
    """Malformed input data, key conflicts, schema/version mismatches."""


class UnknownEntityError(DataError):
    """An entity id outside a fitted one-hot universe (cannot generalize)."""


class ProviderError(MetaInfError):
    """Embedding provider failure (timeout, bad status, dimension mismatch)."""

    def __init__(self, message: str, status: int | None = None) -> None:
        super().__init__(message)
        self.status = status


class ConvergenceError(MetaInfError):
    """Iterative fit did not converge within its epoch budget."""

    def __init__(self, message: str, last_loss: float) -> None:
        super().__init__(message)
        self.last_loss = last_loss


class InfeasibleError(MetaInfError):
    """No method satisfies the budget; carries the cheapest option found."""

    def __init__(self, message: str, cheapest_cost: float, cheapest_method=None) -> None:
        super().__init__(message)
        self.cheapest_cost = cheapest_cost
        self.cheapest_method = cheapest_method
