"""Error types shared across parsing, the CLI, and the HTTP service.

Two classes of input failure are kept distinct on purpose: schema errors
(the document's shape is wrong: missing keys, wrong types, unparseable JSON)
and domain errors (the shape is fine but the content is invalid: dangling
edge endpoints, unknown categories, mismatched counts). The service maps the
former to 400 and the latter to 422; the CLI maps both to exit code 2.
"""

from __future__ import annotations


class InputError(ValueError):
    """Base class for rejected input; carries a path into the document."""

    def __init__(self, message: str, path: str = "/") -> None:
        super().__init__(message)
        self.path = path

    def __str__(self) -> str:  # pragma: no cover - trivial
        return f"{super().__str__()} (at {self.path})"


class SchemaError(InputError):
    """The document's structure does not match the expected schema."""


class DomainError(InputError):
    """Structurally valid input whose content violates a domain rule."""
