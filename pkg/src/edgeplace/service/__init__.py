"""HTTP service exposing the placement toolkit."""

from .app import create_app

__all__ = ["create_app"]
