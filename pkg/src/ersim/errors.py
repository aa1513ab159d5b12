"""Exception types shared across the package."""


class ErsimError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(ErsimError, ValueError):
    """A physical parameter or argument violates its documented range."""


class ConfigError(ErsimError, ValueError):
    """A configuration document failed to parse or validate.

    Carries optional section / line context for diagnostics.
    """

    def __init__(self, message, *, section=None, line=None):
        self.section = section
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if section is not None:
            prefix += f"[{section}] "
        super().__init__(prefix + message)


class StreamFormatError(ErsimError, ValueError):
    """A click-stream file is malformed (magic, version, truncation, order)."""


class StreamInvariantError(ErsimError, ValueError):
    """An in-memory click stream violates gating, ordering or dead-time rules."""
