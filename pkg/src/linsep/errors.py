"""Exception hierarchy for the toolkit.

Two families matter for the CLI: ``ValidationError`` subclasses exit with
code 1, ``DatasetError`` subclasses (file/format problems) with code 2.
"""


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ToolkitError):
    """Bad argument, configuration, or violated precondition."""


class NonFiniteInput(ValidationError):
    pass


class ZeroVector(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class EmptySet(ValidationError):
    pass


class InvalidProportion(ValidationError):
    pass


class NonPositiveN(ValidationError):
    pass


class MismatchedN(ValidationError):
    pass


class MismatchedSamples(ValidationError):
    pass


class DuplicateRow(ValidationError):
    pass


class InvalidTemperature(ValidationError):
    pass


class StepOutOfRange(ValidationError):
    pass


class InvalidConfig(ValidationError):
    pass


class DatasetError(ToolkitError):
    """Problem with on-disk dataset files."""


class MissingFile(DatasetError):
    pass


class ManifestError(DatasetError):
    pass


class MissingEmbedding(DatasetError):
    pass


class DuplicateId(DatasetError):
    pass


class DimMismatch(DatasetError):
    pass


class ParseError(DatasetError):
    """Malformed tensor file. Carries the byte offset of the failing field."""

    def __init__(self, path, offset, reason):
        self.path = str(path)
        self.offset = int(offset)
        self.reason = reason
        super().__init__(f"{self.path} @ byte {self.offset}: {reason}")
