class CovertRouteError(Exception):
    """Base class for all package errors."""


class ScenarioError(CovertRouteError, ValueError):
    """Scenario file or object violates the schema or its invariants."""


class GeometryError(ScenarioError):
    """Degenerate geometry, e.g. two distinct nodes at the same position."""


class GainTableError(CovertRouteError, ValueError):
    """Malformed gain table or missing coverage."""


class MissingLinkError(GainTableError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "missing link"


class InfeasibleError(CovertRouteError):
    """No route satisfies the throughput constraint."""


class ExtractionError(CovertRouteError):
    """Greedy route extraction from Q-tables dead-ended or looped."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = list(partial)
