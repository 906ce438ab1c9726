"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of an operation."""


class InadmissibleSectionError(ValueError):
    """A section violates its constraint beyond the working tolerance."""


class HolonomyError(RuntimeError):
    """Reconstruction failed because some plaquette holonomy is not the identity.

    Carries the offending face id and the defect norm.
    """

    def __init__(self, face, defect):
        super().__init__(f"holonomy defect {defect:.3e} at face {face}")
        self.face = face
        self.defect = defect


class RecoveryConflictError(RuntimeError):
    """Multiplier recovery reached a face along two sweep paths that disagree."""

    def __init__(self, face, discrepancy):
        super().__init__(
            f"multiplier recovery conflict {discrepancy:.3e} at face {face}"
        )
        self.face = face
        self.discrepancy = discrepancy


class PreconditionError(RuntimeError):
    """A documented precondition of an operation failed a numerical check."""


class ConvergenceError(RuntimeError):
    """The solver exhausted its iteration budget.

    The residual history is attached for diagnosis.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []
