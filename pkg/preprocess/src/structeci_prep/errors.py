"""Toolchain error hierarchy, mapped to CLI exit codes."""

from __future__ import annotations


class PrepError(Exception):
    """Base class for toolchain failures."""


class ConfigError(PrepError):
    """Bad flags, unknown backend names, missing inputs. Exit 1."""


class DataError(PrepError):
    """Malformed corpus or dump contents. Exit 2."""
