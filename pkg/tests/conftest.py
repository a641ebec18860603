import pytest
from fastapi.testclient import TestClient

from modelhub.server import ModelHubService, Storage, create_app


@pytest.fixture()
def service(tmp_path):
    return ModelHubService(Storage(tmp_path / "data"))


@pytest.fixture()
def user_token(service):
    return service.create_token("alice")


@pytest.fixture()
def worker_token(service):
    return service.create_token("bench", kind="worker")


@pytest.fixture()
def client(service):
    """API client with no embedded worker; tests drive the worker protocol."""
    app = create_app(service, embedded_worker=False, reap_interval=3600)
    with TestClient(app) as c:
        yield c


@pytest.fixture()
def solving_client(service):
    """API client with the embedded native-lp worker running."""
    app = create_app(service, embedded_worker=True, reap_interval=3600)
    with TestClient(app) as c:
        yield c


def auth(token):
    return {"Authorization": f"Token {token}"}
