"""Exception hierarchy shared by the protocol layers and the CLI."""


class JoinError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(JoinError, ValueError):
    pass


class InvalidSizeError(JoinError, ValueError):
    pass


class EncodingError(JoinError, ValueError):
    """A point or frame failed to decode."""


class DuplicateIdentifierError(JoinError, ValueError):
    pass


class CorrelationConsumedError(JoinError, RuntimeError):
    """A single-use shuffle correlation half was used twice."""


class TransportError(JoinError, ConnectionError):
    pass


class FrameError(TransportError):
    pass


class ParameterMismatchError(JoinError):
    """The peers disagree on public parameters announced in HELLO."""


class ProtocolError(JoinError):
    """The peer sent something the protocol state machine cannot accept."""
