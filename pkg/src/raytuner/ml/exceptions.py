"""Classifier exceptions."""

from ..exceptions import ContractError, DataError, RaytunerError


class ModelError(RaytunerError):
    """Base exception for classifier errors."""

    pass


class DimensionMismatchError(ModelError, ContractError):
    """Raised when inputs do not match a model's input width or ray configuration."""

    pass


class ModelNotFoundError(ModelError, DataError):
    """Raised when a model file cannot be found or parsed."""

    pass
