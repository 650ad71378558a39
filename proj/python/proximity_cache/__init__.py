"""Approximate embedding caches (FLAT and LSH) in front of a vector database."""

from ._proximity import BruteForceStore, Cache, ClosedHandleError, ConfigError

__all__ = ["BruteForceStore", "Cache", "ClosedHandleError", "ConfigError", "create"]


def create(config, store=None):
    """Build a cache handle from a config dict.

    ``store`` is a :class:`BruteForceStore` or a callable
    ``(query, m) -> (ids int64[n], embeddings float32[n, d])`` used on misses.
    """
    return Cache(dict(config), store)
