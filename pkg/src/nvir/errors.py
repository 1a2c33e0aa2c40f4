"""Exception hierarchy.

Two families matter to callers (and to the CLI exit codes): input problems
(``ValidationError`` and subclasses) and numerical failures
(``NumericalError`` and subclasses).
"""


class NvirError(Exception):
    pass


class ValidationError(NvirError, ValueError):
    """Bad input: failed invariant, malformed file, out-of-domain argument."""

    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class SchemaError(ValidationError):
    pass


class FieldMapFormatError(ValidationError):
    pass


class DomainError(ValidationError):
    """No solution of a design equation exists for the given arguments."""


class NoCouplingError(DomainError):
    pass


class ExtentError(ValidationError):
    pass


class ExtrapolationError(ValidationError):
    pass


class NumericalError(NvirError, ArithmeticError):
    pass


class DegenerateSteadyState(NumericalError):
    def __init__(self, nullity, message=None):
        self.nullity = nullity
        super().__init__(
            message
            or f"steady state is not unique: null space has dimension {nullity}"
        )


class StiffnessError(NumericalError):
    pass


class SingularityError(NumericalError):
    pass


class UnphysicalAbsorption(NumericalError):
    pass


class UndefinedSNR(NumericalError):
    pass


class DegenerateOptimum(NumericalError):
    pass
