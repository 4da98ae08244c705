"""Annotations that stay attached to documents as they change."""

from ._core import *  # noqa: F401,F403
from ._core import MagicMarkupError

__all__ = [name for name in dir() if not name.startswith("_")]
