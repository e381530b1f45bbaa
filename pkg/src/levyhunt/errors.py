"""Exception types raised across the package."""


class LevyHuntError(Exception):
    """Base class for all package errors."""


class InvalidTripletError(LevyHuntError, ValueError):
    """A triplet (or one of its parts) violates its invariants."""


class EvaluationError(LevyHuntError, ArithmeticError):
    """The exponent could not be evaluated at some point."""

    def __init__(self, message, z=None):
        super().__init__(message)
        self.z = z


class QuadratureError(LevyHuntError, ArithmeticError):
    pass


class IntegrabilityError(LevyHuntError, ValueError):
    """A required integral against the Levy measure diverges."""


class CapabilityError(LevyHuntError, TypeError):
    """The operation needs data an exponent-only process does not carry."""


class ConvergenceError(LevyHuntError, RuntimeError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class SpecFileError(LevyHuntError, ValueError):
    """Malformed triplet specification; ``field`` points at the offending entry."""

    def __init__(self, message, field=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.field = field
        self.line = line


class ProbeError(LevyHuntError, ValueError):
    """A simulation probe was applied outside its hypothesis."""
