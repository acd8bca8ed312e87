class ExtractError(Exception):
    """Base class; maps to CLI exit code 1."""


class ModelLoadError(ExtractError):
    pass


class TaskFileError(Exception):
    """Unreadable or malformed task input; maps to CLI exit code 2."""
