"""Exception types shared across the package."""


class ChannelFormatError(ValueError):
    """Raised when a channel file cannot be parsed or fails validation."""


class DegenerateInputError(ValueError):
    """Raised when an input distribution has an empty support for some user."""


class GuardExceeded(RuntimeError):
    """Raised when a requested computation exceeds a documented size guard."""
