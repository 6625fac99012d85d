"""Exception hierarchy shared by every nlmc module."""


class NlmcError(Exception):
    """Base class for all library errors."""


class NegativeMass(NlmcError, ValueError):
    pass


class MassNotOne(NlmcError, ValueError):
    pass


class DimensionMismatch(NlmcError, ValueError):
    pass


class LengthMismatch(NlmcError, ValueError):
    pass


class ProductSpaceUnsupported(NlmcError, ValueError):
    pass


class BadStateIndex(NlmcError, IndexError):
    pass


class AggregatorOutOfDomain(NlmcError, ValueError):
    """An aggregator value fell outside the kernel's admissible interval.

    ``step`` is set when the failure happened while iterating a trajectory.
    """

    def __init__(self, message, h=None, step=None):
        super().__init__(message)
        self.h = h
        self.step = step


class MultipleStationary(NlmcError, ValueError):
    def __init__(self, message, h=None, classes=None):
        super().__init__(message)
        self.h = h
        self.classes = classes


class NumericalFailure(NlmcError, ArithmeticError):
    pass


class UnsupportedFamily(NlmcError, ValueError):
    pass


class EmptyInterval(NlmcError, ValueError):
    pass


class CertificationInconsistency(NlmcError, AssertionError):
    """Certified hypotheses held but the solver found contradicting output."""


class UnstableQueue(NlmcError, ValueError):
    pass


class BadMoments(NlmcError, ValueError):
    pass


class GridOverflowExcess(NlmcError, ValueError):
    def __init__(self, message, mass=None, x=None, h=None):
        super().__init__(message)
        self.mass = mass
        self.x = x
        self.h = h


class InfeasiblePolicy(NlmcError, ValueError):
    pass


class ConditionFailed(NlmcError, ValueError):
    """A Corollary-style condition (``"i"``, ``"ii"`` or ``"iii"``) failed."""

    def __init__(self, condition, witness):
        super().__init__(f"condition ({condition}) failed: {witness}")
        self.condition = condition
        self.witness = witness


class NoRoot(NlmcError, ValueError):
    pass


class ParseError(NlmcError, ValueError):
    pass


class ValidationError(NlmcError, ValueError):
    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
