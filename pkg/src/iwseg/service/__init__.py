"""HTTP service layer: FastAPI app, request/response schemas, and a client."""

from .app import create_app
from .client import ServiceClient

__all__ = ["create_app", "ServiceClient"]
