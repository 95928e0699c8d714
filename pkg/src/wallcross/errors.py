"""Error classes shared across modules; the CLI maps them to exit codes."""
from __future__ import annotations


class GenericityError(ValueError):
    """Input sits on a special locus (tied rays, coincident crossings, boundary hits).

    ``suggestion`` optionally carries a perturbed input that avoids the locus.
    """

    def __init__(self, message: str, suggestion=None):
        super().__init__(message)
        self.suggestion = suggestion


class InvariantError(RuntimeError):
    """An internal consistency check failed; this indicates a bug or a bad reduction."""
