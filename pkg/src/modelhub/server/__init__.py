"""Backend service: REST API, persistence, and worker coordination."""

from .api import create_app  # noqa: F401
from .service import ApiError, ModelHubService  # noqa: F401
from .storage import Storage  # noqa: F401
