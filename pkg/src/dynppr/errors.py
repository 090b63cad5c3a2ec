"""Exception types shared across the package."""


class DynpprError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(DynpprError, ValueError):
    """Structurally invalid input: bad shapes, ids out of range, etc."""


class ParseError(ValidationError):
    """Malformed text input. Carries the 1-based line number when known."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class PreconditionError(ValidationError):
    """An operation was called on inputs outside its supported regime
    (e.g. a link-only initializer handed a batch with node changes)."""


class OracleSizeError(ValidationError):
    """Dense oracle refused: graph above the direct-solve cap."""


class BudgetExceededError(DynpprError):
    """Push budget ran out before the residual threshold was reached.

    Carries the partial state so callers can inspect or resume.
    """

    def __init__(self, message, pi=None, r=None, stats=None):
        super().__init__(message)
        self.pi = pi
        self.r = r
        self.stats = stats


class CalibrationError(DynpprError):
    """Epsilon calibration failed to converge. Carries the probe trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])
