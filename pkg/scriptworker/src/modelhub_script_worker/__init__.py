"""Script compute worker for ModelHub backends."""

from .runner import execute  # noqa: F401
from .worker import serve  # noqa: F401

__version__ = "0.1.0"
