"""Exception types shared across the toolkit.

The CLI maps these onto its exit-code contract: config problems exit 3,
I/O problems exit 2, everything else raised from the library exits 4.
"""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(ToolkitError, ValueError):
    """A data object violates an operation's preconditions."""


class InvalidArgumentError(ToolkitError, ValueError):
    """A scalar argument is out of its documented range."""


class InvalidConfigError(ToolkitError, ValueError):
    """A configuration value or combination is unusable."""


class InvalidStateError(ToolkitError, RuntimeError):
    """An operation was called in a state that forbids it."""


class ParseError(ToolkitError, ValueError):
    """A file could not be parsed; message names the offending line or byte."""

    def __init__(self, message: str, *, path=None, line=None, offset=None):
        loc = []
        if path is not None:
            loc.append(str(path))
        if line is not None:
            loc.append(f"line {line}")
        if offset is not None:
            loc.append(f"byte {offset}")
        if loc:
            message = f"{': '.join(loc)}: {message}"
        super().__init__(message)
        self.path = path
        self.line = line
        self.offset = offset
