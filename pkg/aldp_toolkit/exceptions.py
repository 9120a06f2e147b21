"""Errors raised by the toolkit.

Every failure a caller is expected to handle derives from ``AldpError`` so the
command line can report it and exit cleanly.
"""


class AldpError(Exception):
    """Base class for toolkit errors."""


class InvalidBudget(AldpError):
    pass


class NonFiniteInput(AldpError):
    pass


class EmptyInput(AldpError):
    pass


class MissingValue(AldpError):
    pass


class DomainViolation(AldpError):
    """A value falls outside its attribute domain beyond the clamp tolerance."""


class InvalidDimension(AldpError):
    pass


class CombinatorialOverflow(AldpError):
    """Exact binomial arithmetic requested beyond the supported dimension."""


class ConstraintViolated(AldpError):
    """Mechanism parameters cannot satisfy their validity constraint (e.g. C_d * delta >= 1)."""


class NoRootInBracket(AldpError):
    pass


class InvalidQ(AldpError):
    pass


class NegativeDiscriminant(AldpError):
    pass


class MixedProtocolReports(AldpError):
    pass


class DimensionMismatch(AldpError):
    pass


class InvalidLabels(AldpError):
    pass


class InsufficientUsers(AldpError):
    pass


class DomainTooLarge(AldpError):
    pass


class UnsupportedMechanism(AldpError):
    pass


class SchemaError(AldpError):
    pass
