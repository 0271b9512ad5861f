"""Exception types shared across the package."""

from __future__ import annotations


class KsnetError(Exception):
    """Base class for every library-raised error."""


class DomainError(KsnetError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ParameterError(KsnetError, ValueError):
    """Network constants violate a structural bound."""


class InputError(KsnetError, ValueError):
    """Malformed external input: CSV rows, number literals, job configs."""


class SeparationFailure(KsnetError):
    """The point set admits a closed path, so exact interpolation is unsolvable.

    witness holds one weight per point; the weighted branch equations cancel,
    first nonzero weight scaled to +1.
    """

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = None if witness is None else tuple(witness)


class AssemblyError(KsnetError, ValueError):
    """Model components are mutually inconsistent."""


class ModelFormatError(KsnetError, ValueError):
    """A model document failed to parse or validate.

    location is a dotted path into the document, when one is known.
    """

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location


class IterationDiverged(KsnetError):
    """The damped residual iteration let the grid residual grow."""


class InternalInvariantError(KsnetError):
    """A structural invariant failed inside the library; not a caller error."""
