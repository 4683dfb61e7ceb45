"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A size, count, or hyperparameter is outside its allowed range."""


class UsageError(ValueError):
    """Arguments are individually valid but do not fit together."""


class ValidationError(ValueError):
    """A serialized document failed schema or invariant checks.

    ``problems`` lists every offending field so callers can report them all at once.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class OptimizerAbort(RuntimeError):
    """Raised when an objective returns a non-finite value mid-optimization.

    The partial trace up to the failing iteration is kept on ``trace``.
    """

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace
