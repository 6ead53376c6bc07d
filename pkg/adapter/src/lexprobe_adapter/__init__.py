"""Model adapter: per-layer hidden states over a line-delimited protocol."""

from .service import (
    AdapterConfig,
    HiddenStateModel,
    RequestTooLong,
    SELFTEST_REQUEST,
    selftest_pair,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "HiddenStateModel",
    "RequestTooLong",
    "SELFTEST_REQUEST",
    "selftest_pair",
]
