"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An operation was called outside its documented domain."""


class LookupFailed(RuntimeError):
    """A lookup could not be completed (a hop did not answer)."""

    def __init__(self, message, kind="timeout"):
        super().__init__(message)
        self.kind = kind


class JoinFailed(RuntimeError):
    """The bootstrap peer did not answer a join request."""


class ConfigError(ValueError):
    """Invalid experiment configuration.  ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.message = message
        self.path = path
        self.line = line
        where = ""
        if path is not None and line is not None:
            where = f"{path}:{line}: "
        elif path is not None:
            where = f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)

    def located(self, path):
        return ConfigError(self.message, path=path, line=self.line)
