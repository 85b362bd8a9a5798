"""Exception hierarchy shared across the package."""


class GraphMDLError(Exception):
    """Base class for all package errors."""


class ConfigError(GraphMDLError, ValueError):
    """Invalid hyperparameter or configuration value."""


class DataError(GraphMDLError):
    """Malformed or unusable input data."""


class SchemaError(DataError):
    """A JSON document does not match the expected graph schema."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        parts = [message]
        if field is not None:
            parts.append(f"field={field}")
        if line is not None:
            parts.append(f"line={line}")
        super().__init__(" ".join(parts) if len(parts) > 1 else message)


class ParseError(DataError):
    """Nothing usable could be parsed from a script completion."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = list(diagnostics or [])
        super().__init__(message)


class SpanError(DataError):
    """Overlapping or invalid token spans."""


class CycleError(GraphMDLError):
    """The graph contains a directed cycle."""


class SizeError(GraphMDLError):
    """Instance exceeds the size guard of an exact procedure."""


class InfeasibleSelection(GraphMDLError):
    """A selection violates coupling or acyclicity constraints."""


class SolverTimeoutError(GraphMDLError, TimeoutError):
    """Branch-and-bound ran out of budget.

    The best selection found so far is attached as ``selection`` with a
    heuristic certificate.
    """

    def __init__(self, message, selection=None):
        self.selection = selection
        super().__init__(message)


class NetworkError(GraphMDLError):
    """Remote endpoint unreachable after retries."""


class AuthError(GraphMDLError):
    """Remote endpoint rejected the credentials."""
