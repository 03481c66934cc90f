"""Service layer: FastAPI app plus request/response schemas.

Run it with uvicorn for a shared multi-client deployment:

    uvicorn fabricflow.service:app
"""

from .app import app, create_app

__all__ = ["app", "create_app"]
