"""Exception taxonomy shared by the engine, store, service and CLI.

Each class carries a stable `code` used verbatim by the HTTP error
payloads, so transports never invent their own categories.
"""


class CbirError(Exception):
    """Base class for every anticipated engine failure."""

    code = "INTERNAL"


class StorageError(CbirError):
    """Store directory cannot be created, locked or written."""

    code = "STORAGE"


class CorruptStoreError(StorageError):
    """Store files exist but cannot be parsed. A corrupt store is reported,
    never silently reinitialized."""

    code = "STORAGE"


class NotFoundError(CbirError):
    """No entity with the requested id."""

    code = "NOT_FOUND"


class ValidationError(CbirError):
    """Entity, parameter set or request violates an invariant."""

    code = "VALIDATION"


class DecodeError(CbirError):
    """Image bytes could not be decoded as PNG or JPEG."""

    code = "DECODE"


class InsufficientDataError(CbirError):
    """Too few images or descriptors for the requested operation."""

    code = "INSUFFICIENT_DATA"
