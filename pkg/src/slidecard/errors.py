"""Exception types shared across the package.

Precondition violations on in-process APIs raise plain ``ValueError``;
the classes here exist so the CLI can map failures to distinct exit
codes (configuration vs. input data).
"""


class ConfigError(ValueError):
    """A run configuration is invalid (bad sizes, incompatible options)."""


class TraceError(ValueError):
    """Base class for problems in a trace file."""


class TraceParseError(TraceError):
    """A record could not be decoded; carries the offending position."""

    def __init__(self, message: str, *, line: int | None = None,
                 byte: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if byte is not None:
            where.append(f"byte {byte}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.line = line
        self.byte = byte


class TraceOrderError(TraceError):
    """Timestamps in a trace went backwards."""

    def __init__(self, message: str, *, line: int | None = None,
                 byte: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if byte is not None:
            where.append(f"byte {byte}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.line = line
        self.byte = byte
