"""Exception types shared across the toolkit."""


class RemkitError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(RemkitError, ValueError):
    """An argument violates a documented precondition."""


class DatasetFormatError(RemkitError):
    """Base class for on-disk dataset problems; `code` identifies the kind."""

    code = "format-error"


class MissingFileError(DatasetFormatError):
    code = "missing-file"


class MalformedHeaderError(DatasetFormatError):
    code = "malformed-header"


class DimensionMismatchError(DatasetFormatError):
    code = "dimension-mismatch"


class ChecksumError(DatasetFormatError):
    code = "checksum-failure"


class FrozenModelError(RemkitError):
    """Training was attempted on a frozen model."""


class LayoutMismatchError(RemkitError):
    """An input stack's channel layout differs from the model's."""


class TrainingDivergedError(RemkitError):
    """Loss became non-finite; carries diagnostics in the message."""
