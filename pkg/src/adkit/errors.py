"""Error taxonomy shared by every adkit module.

Each error carries a stable machine-readable ``code`` so CLI consumers and
tests can match on the failure kind without parsing prose.
"""

from __future__ import annotations


class AdkitError(Exception):
    """Base class; ``code`` is stable across releases."""

    code = "adkit-error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class EmptySetError(AdkitError):
    code = "empty-set-diameter"


class NotACoverError(AdkitError):
    """Raised when a family fails to cover its window.

    ``details['witness']`` holds one uncovered point index.
    """

    code = "not-a-cover"


class NonIntegerMetricError(AdkitError):
    """Clique-based routines need integer distances to build threshold graphs."""

    code = "clique-method-needs-integers"


class BudgetExhaustedError(AdkitError):
    """A bounded search ran out of node budget before reaching a verdict."""

    code = "budget-exhausted"


class PreconditionError(AdkitError):
    """An operation's documented precondition does not hold for these inputs."""

    code = "precondition-violation"


class CertificateError(AdkitError):
    """A transport postcondition failed even though preconditions held.

    This always indicates an implementation bug, never a caller error, so it
    is a distinct code that tests treat as fatal.
    """

    code = "certificate-failure"


class WindowTooSmallError(AdkitError):
    code = "window-too-small"


class InsufficientRangeError(AdkitError):
    """A sampled curve does not extend far enough to evaluate a comparison."""

    code = "insufficient-range"
