"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A component was wired with inconsistent shapes, kinds or parameters."""


class StateError(RuntimeError):
    """An operation was called before its state was initialised."""


class FitError(ValueError):
    """Least-squares input is rank deficient or under-determined."""


class LogFormatError(ValueError):
    """A telemetry log is corrupt or truncated.

    Carries the byte offset at which parsing failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class TopicTypeError(TypeError):
    """A payload published on a bus topic does not match the registered type."""


class ProtocolError(RuntimeError):
    """A test protocol could not produce a result (e.g. no contact in sweep)."""
