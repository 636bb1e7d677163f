"""Exception hierarchy shared by the simulator, the election engine and the CLI."""


class ConfigError(ValueError):
    """Invalid parameters or malformed configuration file."""


class ContractError(ValueError):
    """A caller violated an operation's precondition."""


class InfeasibleError(ValueError):
    """No parameter choice satisfies the requested security targets."""

    def __init__(self, message: str, constraint: str):
        super().__init__(message)
        self.constraint = constraint


class TransportError(RuntimeError):
    """A pairwise channel failed to deliver."""


class ElectionAbort(RuntimeError):
    """Base class for protocol aborts. ``stats`` holds whatever was recorded so far."""

    reason = "abort"

    def __init__(self, message: str, stats=None):
        super().__init__(message)
        self.stats = stats


class AnonAbort(ElectionAbort):
    reason = "anon"


class ThresholdAbort(ElectionAbort):
    reason = "threshold"


class RetryCapAbort(ElectionAbort):
    reason = "retry_cap"
