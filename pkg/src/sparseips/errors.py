"""Exception types raised across the package."""


class SparseIPSError(Exception):
    """Base class for all package errors."""


class GraphError(SparseIPSError):
    """Invalid degree sequence, graph source or sampling failure."""


class ModelError(SparseIPSError):
    """A model definition violates its declared contract."""


class CycleError(ModelError):
    """The transition graph of a model contains a directed cycle."""

    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__("transition graph has a cycle: " + " -> ".join(map(str, self.cycle)))


class ConfigError(SparseIPSError):
    """Malformed or incomplete configuration document."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class StateSpaceError(SparseIPSError):
    """Requested enumeration exceeds the configured size cap."""


class IntegratorError(SparseIPSError):
    """The ODE integrator could not proceed (e.g. step-size underflow)."""
