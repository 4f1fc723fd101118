"""Exception types shared across the package.

The CLI maps these onto exit codes: usage and validation problems
(ValueError, including CycleError) exit 1, numerical failures
(NumericalError and subclasses) exit 2.
"""

from __future__ import annotations


class CycleError(ValueError):
    """Raised when an edge-weight matrix contains a directed cycle.

    ``cycle`` holds one offending node sequence (0-based, first node
    repeated at the end).
    """

    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        pretty = " -> ".join(str(v + 1) for v in self.cycle)
        super().__init__(f"edge-weight matrix contains a cycle: {pretty}")


class NumericalError(RuntimeError):
    """A computation failed for numerical reasons (CLI exit code 2)."""


class NotPositiveDefiniteError(NumericalError):
    """An input matrix violates a positive (semi-)definiteness requirement."""
