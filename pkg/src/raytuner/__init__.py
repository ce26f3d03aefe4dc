"""Ray-based state classification and simplex autotuning for double quantum dots."""

__version__ = "0.1.0"
