"""Exception hierarchy shared by all raytuner modules."""


class RaytunerError(Exception):
    """Base exception for raytuner errors."""

    pass


class ConfigurationError(RaytunerError):
    """Raised when a configuration, parameter range or window is invalid."""

    pass


class OutOfRangeError(RaytunerError):
    """Raised when a ray leaves the voltage domain of a sampler or diagram."""

    pass


class ContractError(RaytunerError):
    """Raised when an input violates an operation's precondition."""

    pass


class DataError(RaytunerError):
    """Raised when a file or generated dataset is malformed or inconsistent."""

    pass
