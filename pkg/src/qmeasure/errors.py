class ValidationError(ValueError):
    """Input violates a structural invariant (shape, trace, positivity, ...)."""


class DimensionError(ValidationError):
    pass


class NumericalGuardError(ArithmeticError):
    """A numerical safety check tripped (step size, conditioning)."""


class IllConditionedError(NumericalGuardError):
    pass


class SingularMatrixError(NumericalGuardError):
    pass


class RankDeficientError(NumericalGuardError):
    pass
