"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """A certified series truncation could not be reached within the term budget.

    The partial result accumulated so far is stored in ``partial`` (may be None).
    """

    def __init__(self, message, partial=None, terms=None):
        super().__init__(message)
        self.partial = partial
        self.terms = terms


class AssumptionViolation(RuntimeError):
    """A configuration assertion (positive definiteness, determinacy, ...) was
    detected to be false during a computation."""
