class SchedulingError(ValueError):
    """An event was scheduled before the current simulated time."""


class ProtocolError(RuntimeError):
    """A protocol entity received input that its state machine forbids."""
