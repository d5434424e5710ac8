"""Exception hierarchy shared by all layers."""


class StructuralError(ValueError):
    """Malformed input: shape mismatch, unresolved reference, bad endpoints."""


class TruncationError(StructuralError):
    """A result would need simplicial levels beyond the available window."""


class InvariantViolation(ValueError):
    """An input that is well formed but breaks a required identity (d^2 != 0, ...)."""


class ConventionError(RuntimeError):
    """A construction produced output failing its own defining identities."""


class VerificationFailure(AssertionError):
    """A mechanically checked identity has a nonzero residual."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
