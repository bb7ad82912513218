"""Exception hierarchy shared across the package."""


class FabricError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(FabricError):
    """A document does not conform to the expected file schema."""


class InvariantError(FabricError):
    """A structurally valid document violates a network invariant."""


class SingularSystemError(FabricError):
    """The assembled conductance system has no unique solution."""

    def __init__(self, message, isolated_nodes=()):
        super().__init__(message)
        self.isolated_nodes = tuple(isolated_nodes)


class SolverError(FabricError):
    """Numerical failure inside a direct solve."""


class ConvergenceError(FabricError):
    """Iterative relaxation did not reach the requested tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SearchSpaceError(FabricError):
    """An exhaustive enumeration would exceed the configured guard."""
