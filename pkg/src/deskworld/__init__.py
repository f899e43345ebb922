"""Headless deterministic rigid-body simulation server with a lock-step protocol."""

__version__ = "0.1.0"
