"""Exception types shared across the package."""


class EmptyBlockError(ValueError):
    """An allocation has at least one block with no members."""


class InsufficientSupportError(ValueError):
    """A score vector has fewer nonzero entries than requested features.

    Carries the observed nonzero count in ``nnz``.
    """

    def __init__(self, nnz, requested):
        self.nnz = int(nnz)
        self.requested = int(requested)
        super().__init__(
            f"score vector has only {self.nnz} nonzero entries, "
            f"cannot rank top {self.requested} features"
        )


class SolverError(RuntimeError):
    """Solver aborted; the partial trace (if any) is attached as ``trace``."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class DegenerateStepError(SolverError):
    """A projected gradient step clamped every coordinate to zero."""


class NonFiniteError(SolverError):
    """A non-finite value appeared during iterative updates."""
