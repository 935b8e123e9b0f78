"""Exception hierarchy shared by all sawqed modules."""


class SawqedError(Exception):
    """Base class for library errors."""


class CatalogError(SawqedError):
    """Malformed catalog file or invalid material record."""


class NotFoundError(SawqedError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class SolverError(SawqedError):
    """A root search or integration did not converge."""


class NotPiezoelectricError(SawqedError):
    pass


class InfeasibleDesignError(SawqedError):
    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class IntegrationError(SolverError):
    pass
