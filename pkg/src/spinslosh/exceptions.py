class SloshError(Exception):
    """Base class for errors raised by spinslosh."""


class UndefinedNormalError(SloshError, ValueError):
    pass


class SingularConstraintError(SloshError, ArithmeticError):
    pass


class IntegrationDivergedError(SloshError, ArithmeticError):
    """A state became non-finite during integration."""

    def __init__(self, message, t=None, record=None):
        super().__init__(message)
        self.t = t
        self.record = record if record is not None else {}


class ScenarioError(SloshError, ValueError):
    """Scenario file could not be parsed.

    ``line`` and ``column`` are 1-based and ``None`` when unknown.
    """

    def __init__(self, message, path=None, line=None, column=None):
        loc = ""
        if path is not None:
            loc = str(path)
            if line is not None:
                loc += f":{line}"
                if column is not None:
                    loc += f":{column}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line
        self.column = column


class ValidationError(SloshError, ValueError):
    """A model invariant does not hold. ``constraint`` names the failing check."""

    def __init__(self, message, constraint=None):
        super().__init__(message)
        self.constraint = constraint


class CalibrationError(SloshError, RuntimeError):
    """The optimizer could not produce a usable result."""
