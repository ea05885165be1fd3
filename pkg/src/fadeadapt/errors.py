"""Exception types raised by the library."""


class FadeAdaptError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(FadeAdaptError, ValueError):
    pass


class DegenerateChannelError(FadeAdaptError, ValueError):
    """A channel gain is zero, so the fade state is undefined."""


class FeedbackDecodeError(FadeAdaptError, ValueError):
    pass


class ProtocolError(FadeAdaptError, ValueError):
    """A feedback message does not match the rotation policy."""


class InsufficientRangeError(FadeAdaptError, ValueError):
    """An SER curve does not bracket the requested target."""
