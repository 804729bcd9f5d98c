"""Exception taxonomy. CLI exit codes map DataError -> 2, TrainingError -> 3."""


class TempocastError(Exception):
    """Base class for all package errors."""


class DataError(TempocastError):
    """Anything wrong with input data or its shape."""


class SchemaError(DataError):
    """CSV header does not name the expected columns."""


class ParseError(DataError):
    """A cell could not be parsed; carries the offending data-row index."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class ValidationError(DataError):
    """A value violates a physical bound; names column, row and value."""

    def __init__(self, message, column=None, row=None, value=None):
        super().__init__(message)
        self.column = column
        self.row = row
        self.value = value


class EmptyFrameError(DataError):
    """Operation requires a non-empty (or long-enough) frame."""


class GapError(DataError):
    """Missing hours under the reject gap policy; carries the missing instants."""

    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = tuple(missing)


class ShapeError(DataError):
    """Array shape or column count does not match what was fitted/configured."""


class ParameterError(TempocastError):
    """Invalid configuration or operation parameter."""


class TrainingError(TempocastError):
    """Base class for training failures."""


class TrainingDivergedError(TrainingError):
    """Loss became non-finite; carries the epoch index where it happened."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class ModelFormatError(TempocastError):
    """Serialized model bytes are corrupt or truncated."""


class ModelVersionError(ModelFormatError):
    """Serialized model version is not supported; names both versions."""

    def __init__(self, found, supported):
        super().__init__(
            f"model file version {found} is not supported (reader supports {supported})"
        )
        self.found = found
        self.supported = supported
