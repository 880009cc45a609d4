"""Shared exception types."""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid configuration or limits."""


class GenerationError(RuntimeError):
    """Random data generation could not satisfy its constraints."""


class CompletionError(RuntimeError):
    """Skeleton completion exhausted its retry budget."""


class SetupError(RuntimeError):
    """An engine target could not be prepared for a campaign iteration."""
