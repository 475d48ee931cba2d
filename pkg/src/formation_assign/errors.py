"""Exception hierarchy shared by every module."""


class FormationError(Exception):
    """Base class for all errors raised by this package."""


class InputError(FormationError, ValueError):
    """Malformed or out-of-domain arguments."""


class InvariantError(FormationError):
    """A value violates one of its structural invariants."""


class AssumptionError(FormationError):
    """A precondition of the exchange protocol does not hold."""


class NumericError(FormationError, ArithmeticError):
    """Non-finite values or a failed numerical routine.

    ``index`` is the offending flat component index when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SingularityError(NumericError):
    """Thrust inversion requested with a (near) free-fall vertical command."""


class ConfigError(FormationError):
    """Scenario file could not be loaded or validated.

    ``field`` is a dotted path into the document, ``line`` the 1-based line
    for JSON syntax errors.
    """

    def __init__(self, message, field=None, line=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field:
            loc.append(f"field '{field}'")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.field = field
        self.line = line


class RunAbort(FormationError):
    """Simulation stopped because a fatal runtime condition was detected."""
