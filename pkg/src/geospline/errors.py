"""Exception hierarchy for geospline."""


class GeosplineError(Exception):
    """Base class for all geospline errors."""


class ContractViolation(GeosplineError):
    """Inputs violate a documented precondition (e.g. mismatched base points)."""


class DomainError(GeosplineError):
    """A geometric operation was requested outside its valid domain
    (e.g. logarithm at the cut locus, singular boundary value problem)."""


class ConfigurationError(GeosplineError):
    """Invalid configuration: unknown curve name, malformed grid, bad options."""


class SolverError(GeosplineError):
    """The optimizer failed to converge; carries the final solve statistics."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats
