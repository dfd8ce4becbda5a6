"""Exception hierarchy shared by every module."""


class VarBoundsError(Exception):
    """Base class for all errors raised by varbounds."""


class InvalidInput(VarBoundsError, ValueError):
    """Arguments violate an operation's preconditions."""


class InvalidModel(InvalidInput):
    """A user-supplied process kernel is inconsistent (e.g. asymmetric)."""


class NotApplicable(VarBoundsError):
    """A bound was requested for weights outside its hypothesis class."""


class GenerationFailure(VarBoundsError):
    """Random instance generation exhausted its retry budget."""


class InvariantViolation(VarBoundsError, AssertionError):
    """A mathematical invariant failed beyond its tolerance."""
