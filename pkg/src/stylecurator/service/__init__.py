from .app import create_app
from .session import ReviewSession

__all__ = ["create_app", "ReviewSession"]
