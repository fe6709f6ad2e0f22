"""Exception types.  The CLI maps ValidationError to exit code 2, others to 1."""


class OctspecError(Exception):
    pass


class ValidationError(OctspecError, ValueError):
    """An input violates an operation's precondition."""


class NotSelfAdjointError(ValidationError):
    pass


class NoFullAdjointError(ValidationError):
    pass


class ComputationError(OctspecError, RuntimeError):
    """A numerical step failed (non-convergence, failed verification)."""


class GradingError(ComputationError):
    pass
