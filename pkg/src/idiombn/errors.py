"""Exception hierarchy shared across the package."""

from __future__ import annotations


class IdiomBNError(Exception):
    """Base class for all errors raised by this package."""


class UnknownVariableError(IdiomBNError):
    """A variable name does not exist in the network."""


class UnknownStateError(IdiomBNError):
    """A state label is not valid for the named variable."""


class InvalidNetworkError(IdiomBNError):
    """Network construction failed; carries every violation found.

    The ``issues`` attribute holds the full list, not just the first.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        lines = "; ".join(i.message for i in self.issues)
        super().__init__(f"invalid network: {lines}")


class OverlappingSetsError(IdiomBNError):
    """Separation query sets are not pairwise disjoint."""


class EmptyQuerySetError(IdiomBNError):
    """A separation query endpoint set is empty."""


class IncompleteAssignmentError(IdiomBNError):
    """A full-joint evaluation was given a partial assignment."""


class TooLargeError(IdiomBNError):
    """The network exceeds the enumeration oracle's size guard."""


class ImpossibleEvidenceError(IdiomBNError):
    """The supplied evidence has probability zero (below 1e-12)."""


class MissingSlotError(IdiomBNError):
    """An idiom binding omits a required slot."""


class ArityViolationError(IdiomBNError):
    """An idiom binding does not satisfy a slot's arity."""


class CompositionCycleError(IdiomBNError):
    """Composing fragments produced a directed cycle.

    ``cycle`` names the offending variables in order; ``contributors`` maps
    each cycle edge to the fragment labels that contributed it.
    """

    def __init__(self, cycle, contributors):
        self.cycle = list(cycle)
        self.contributors = dict(contributors)
        super().__init__(
            "composition cycle: " + " -> ".join(self.cycle + self.cycle[:1])
        )


class InvalidAdjustmentSetError(IdiomBNError):
    """The adjustment set contains the treatment, target, or a descendant
    of the treatment."""


class BackdoorOpenError(IdiomBNError):
    """Adjustment requested with an open backdoor path; refusing rather
    than producing a biased estimate."""


class UnknownFixtureError(IdiomBNError):
    """No fixture registered under the requested id."""


class UnknownTemplateError(IdiomBNError):
    """No idiom template with the given id."""
