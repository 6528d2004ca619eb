"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the validity range of a model or routine."""


class ParseError(ValueError):
    """Malformed input file. Carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class PhysicalityError(ValueError):
    """A computed quantity violates a physical bound beyond tolerance."""


class InfeasibleError(ValueError):
    """A requested target cannot be met within the allowed model range."""


class NumericalError(RuntimeError):
    """A convergence or stability check failed."""
