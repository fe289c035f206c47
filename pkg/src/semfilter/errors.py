"""Exception hierarchy shared by all semfilter modules.

Each subclass carries the process exit code the CLI maps it to.
"""


class SemfilterError(Exception):
    exit_code = 1


class ConfigError(SemfilterError):
    """Invalid configuration, CLI arguments, or malformed input data."""

    exit_code = 2


class ImageIOError(SemfilterError):
    """Unreadable, unsupported, or degenerate image files."""

    exit_code = 3


class BackendError(SemfilterError):
    """Embedding backend failed to load or run."""

    exit_code = 4


class CodecError(SemfilterError):
    """Codec invocation or bitstream round-trip failed."""

    exit_code = 5
