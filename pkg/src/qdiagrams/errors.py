"""Exception hierarchy shared by every module."""


class DiagramError(Exception):
    """Base class for library errors."""


class DimensionError(DiagramError, ValueError):
    """Leg extents or matrix shapes do not line up."""


class ArgumentError(DiagramError, ValueError):
    """An argument is malformed (duplicate legs, non-unit vector, ...)."""


class BasisLookupError(DiagramError, KeyError):
    """Requested basis id is not registered."""


class CompositionError(DiagramError, ValueError):
    """Boundaries of two diagrams do not match."""


class ValidationError(DiagramError, ValueError):
    """A diagram violates its structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations) or "invalid diagram")


class MatchError(DiagramError, ValueError):
    """A rewrite site no longer matches the diagram."""


class RuleDomainError(DiagramError, ValueError):
    """A rule was requested outside the domain where it is sound."""


class PreconditionError(DiagramError, ValueError):
    """A check was asked for on inputs that violate its premise."""


class ParseError(DiagramError, ValueError):
    """A diagram file could not be read."""
