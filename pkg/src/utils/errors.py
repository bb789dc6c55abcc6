"""Exception types raised by the analysis modules.

Everything derives from ``ValueError`` so callers that only care about bad
input can keep catching the builtin.
"""


class SubregError(ValueError):
    """Base class for all errors raised by subreg."""


class InputError(SubregError):
    """Malformed problem data, a point off the graph, an empty inverse image."""


class DimensionMismatchError(InputError):
    """A vector does not conform to the dimension of its declared space."""


class DomainError(SubregError):
    """A quantity was requested outside the set where it is defined."""


class InvariantViolationError(SubregError):
    """A modulation or gauge function breaks one of its defining properties."""


class UnsupportedStructureError(SubregError):
    """The map representation carries no structure for the requested dual object."""


class PreconditionError(SubregError):
    """A hypothesis of the requested check (for example convexity) is not declared."""
