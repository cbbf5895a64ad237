"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Invalid configuration value; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class SwapRejected(RuntimeError):
    """A hook refused a swap (same-block swap whose price is not attested)."""


class WithdrawalBlocked(RuntimeError):
    """Hedger withdrawal exceeds the available budget or balance."""


class ProtocolError(RuntimeError):
    """Hooks called out of order, e.g. after_swap without a matching before_swap."""


class NumericalError(ArithmeticError):
    """A non-finite value was produced by a simulation."""
