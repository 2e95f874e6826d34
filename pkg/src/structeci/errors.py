"""Shared exception types.

The CLI maps these onto process exit codes, so the split matters:
config/usage problems, bad input data, and LLM gateway failures are
distinct failure classes.
"""

from __future__ import annotations


class StructEciError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(StructEciError):
    """Invalid configuration or command usage."""


class DataError(StructEciError):
    """Malformed or inconsistent input data."""


class GatewayError(StructEciError):
    """Base class for LLM gateway failures."""


class TransportError(GatewayError):
    """Network failure or retryable HTTP error that survived all retries."""


class RequestError(GatewayError):
    """Non-retryable HTTP client error (4xx other than 429)."""

    def __init__(self, status: int, body: str):
        super().__init__(f"gateway rejected request: HTTP {status}: {body[:2000]}")
        self.status = status
        self.body = body
