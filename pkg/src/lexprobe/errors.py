"""Exception hierarchy shared across the toolkit."""


class LexprobeError(Exception):
    """Base class for all toolkit errors."""


class ParseError(LexprobeError):
    """A line of an input file could not be parsed."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class ValidationError(LexprobeError):
    """Parsed input violates a documented invariant."""


class BackendError(LexprobeError):
    """An embedding backend failed or returned malformed data."""


class ConfigError(LexprobeError):
    """A run configuration is unusable (bad flag, missing file, ...)."""
