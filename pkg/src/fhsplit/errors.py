"""Exception hierarchy shared by all modules.

The CLI maps each family onto a process exit code, so new error types
should subclass one of these rather than ``Exception`` directly.
"""


class FronthaulError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ConfigurationError(FronthaulError, ValueError):
    """Invalid or inconsistent configuration value."""

    exit_code = 2


class CapacityError(FronthaulError, ValueError):
    """Offered load exceeds what the configured cell can carry."""

    exit_code = 3

    def __init__(self, message, peak_mbps=None):
        super().__init__(message)
        self.peak_mbps = peak_mbps


class InfeasibleError(FronthaulError, ValueError):
    """A latency budget cannot be met; ``deficit_us`` is how far short it falls."""

    exit_code = 3

    def __init__(self, message, deficit_us=None):
        super().__init__(message)
        self.deficit_us = deficit_us


class FramingError(FronthaulError, ValueError):
    """Malformed wire frame or soft-bit block of unexpected length."""

    exit_code = 4

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (offset {offset})")
        self.offset = offset


class SessionError(FronthaulError, RuntimeError):
    """Transport or endpoint failure during an emulation session."""

    exit_code = 4


class SizeError(FronthaulError, ValueError):
    """Payload empty or larger than the configured transport block limit."""

    exit_code = 2
