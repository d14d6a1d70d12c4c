"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shapes do not match what an operation expects."""


class NonFiniteError(FloatingPointError):
    """A NaN or infinity reached a place that must stay finite; training aborts."""


class DivergenceError(RuntimeError):
    """A policy update moved further from the behaviour policy than allowed."""


class CheckpointError(ValueError):
    """A checkpoint file is malformed, truncated or from another format version."""


class ConfigError(ValueError):
    """Invalid run configuration. ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
