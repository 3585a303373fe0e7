class CompactOIEError(Exception):
    """Base class for package errors."""


class DataError(CompactOIEError):
    """Malformed input data (records, parses, synset files)."""


class OverlapError(DataError):
    """Two distinct constituents share a word; the table cannot express it."""


class ConflictError(DataError):
    """Two triples demand different labels for the same cell."""


class InvalidGrid(DataError):
    pass


class ParseError(DataError):
    pass


class EmptyInput(DataError):
    pass


class ModelError(CompactOIEError):
    """Checkpoint loading or model configuration problems."""


class LengthError(ModelError):
    """Encoded sequence longer than the configured maximum."""


class BackendError(CompactOIEError):
    """A triple-extraction backend failed or returned ungrounded output."""
