"""Worker protocol conformance against a live backend.

The backend is started through its command line and spoken to purely over
REST; nothing here imports backend code.
"""

import socket
import subprocess
import sys
import threading
import time
from pathlib import Path

import pytest
import requests

from modelhub_script_worker.worker import serve

DATA = Path(__file__).parent / "data"


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def _cli_token(data_dir, user, worker=False) -> str:
    cmd = [sys.executable, "-m", "modelhub.cli", "token", "create", user,
           "--data-dir", str(data_dir)]
    if worker:
        cmd.append("--worker")
    return subprocess.check_output(cmd, text=True).strip()


@pytest.fixture(scope="module")
def backend(tmp_path_factory):
    data_dir = tmp_path_factory.mktemp("backend-data")
    user_token = _cli_token(data_dir, "alice")
    worker_token = _cli_token(data_dir, "bench", worker=True)
    port = _free_port()
    proc = subprocess.Popen(
        [
            sys.executable, "-m", "modelhub.cli", "serve",
            "--port", str(port), "--data-dir", str(data_dir),
            "--embedded-worker", "off", "--log-level", "warning",
        ],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    url = f"http://127.0.0.1:{port}"
    deadline = time.time() + 15
    while time.time() < deadline:
        try:
            r = requests.get(
                f"{url}/api/models/",
                headers={"Authorization": f"Token {user_token}"},
                timeout=1,
            )
            if r.status_code == 200:
                break
        except requests.ConnectionError:
            time.sleep(0.05)
    else:
        proc.kill()
        raise RuntimeError("backend did not start")
    yield url, user_token, worker_token
    proc.terminate()
    proc.wait(timeout=10)


def _headers(token):
    return {"Authorization": f"Token {token}"}


def _upload(url, token, name, source: str):
    r = requests.post(
        f"{url}/api/models/",
        headers=_headers(token),
        data={"name": name, "kernel_tag": "script"},
        files={"file": (f"{name}.py", source.encode())},
        timeout=10,
    )
    assert r.status_code == 201, r.text
    return r.json()["id"]


def _run(url, token, model_id) -> str:
    r = requests.post(f"{url}/api/models/{model_id}/run/", headers=_headers(token), timeout=10)
    assert r.status_code == 201, r.text
    return r.json()["id"]


def _wait_terminal(url, token, execution_id, timeout=30) -> str:
    deadline = time.time() + timeout
    while time.time() < deadline:
        r = requests.get(
            f"{url}/api/executions/{execution_id}/", headers=_headers(token), timeout=10
        )
        status = r.json()["status"]
        if status in ("success", "error"):
            return status
        time.sleep(0.1)
    raise TimeoutError(execution_id)


def _worker_thread(url, worker_token, **kw):
    stop = threading.Event()
    ready = threading.Event()
    kw.setdefault("poll_timeout", 0.3)
    kw.setdefault("heartbeat_interval", 5.0)
    thread = threading.Thread(
        target=serve,
        args=(url, worker_token),
        kwargs={"stop_event": stop, "ready_event": ready, **kw},
        daemon=True,
    )
    thread.start()
    assert ready.wait(timeout=10), "worker never registered"
    return stop, thread


def test_stubbed_script_model_end_to_end(backend):
    url, user_token, worker_token = backend
    model_id = _upload(
        url, user_token, "Stubbed DCOPF", (DATA / "stubbed_model.py").read_text()
    )
    r = requests.put(
        f"{url}/api/models/{model_id}/interface/objects/feastol/",
        headers=_headers(user_token),
        json={"value": 1e-3},
        timeout=10,
    )
    assert r.status_code == 200

    stop, thread = _worker_thread(url, worker_token)
    try:
        execution_id = _run(url, user_token, model_id)
        assert _wait_terminal(url, user_token, execution_id) == "success"
        results = requests.get(
            f"{url}/api/executions/{execution_id}/results/",
            headers=_headers(user_token),
            timeout=10,
        ).json()["results"]
        assert {"P_limits", "gen_cost_obj", "problem", "solver", "info", "output_obj"} <= set(
            results
        )
        assert results["solver"]["feastol"] == 1e-3
        log = requests.get(
            f"{url}/api/executions/{execution_id}/log/",
            headers=_headers(user_token),
            timeout=10,
        ).json()["log"]
        assert "solving with" in log  # the script's own stdout
        assert log.strip()
    finally:
        stop.set()
        thread.join(timeout=10)


def test_exception_script_yields_error_with_traceback(backend):
    url, user_token, worker_token = backend
    source = "#@ Constraint: c\nc = []\nraise ValueError('bad data')\n"
    model_id = _upload(url, user_token, "Broken Script", source)
    stop, thread = _worker_thread(url, worker_token)
    try:
        execution_id = _run(url, user_token, model_id)
        assert _wait_terminal(url, user_token, execution_id) == "error"
        log = requests.get(
            f"{url}/api/executions/{execution_id}/log/",
            headers=_headers(user_token),
            timeout=10,
        ).json()["log"]
        assert "Traceback" in log
        assert "ValueError: bad data" in log
    finally:
        stop.set()
        thread.join(timeout=10)


def test_two_workers_one_job_single_execution(backend):
    url, user_token, worker_token = backend
    source = "#@ Output Object: tag\nimport os\ntag = os.getpid()\n"
    model_id = _upload(url, user_token, "Contended", source)
    stop1, t1 = _worker_thread(url, worker_token)
    stop2, t2 = _worker_thread(url, worker_token)
    try:
        execution_id = _run(url, user_token, model_id)
        assert _wait_terminal(url, user_token, execution_id) == "success"
        record = requests.get(
            f"{url}/api/executions/{execution_id}/", headers=_headers(user_token), timeout=10
        ).json()
        assert record["worker_id"]  # exactly one claimed it
        results = requests.get(
            f"{url}/api/executions/{execution_id}/results/",
            headers=_headers(user_token),
            timeout=10,
        ).json()["results"]
        assert isinstance(results["tag"], int)
    finally:
        stop1.set()
        stop2.set()
        t1.join(timeout=10)
        t2.join(timeout=10)


def test_worker_survives_unreachable_backend():
    crashed = []
    stopper = threading.Event()

    def target():
        try:
            serve(
                "http://127.0.0.1:9",  # discard port: nothing listens
                "irrelevant",
                poll_timeout=0.2,
                stop_event=stopper,
            )
        except Exception as exc:  # pragma: no cover
            crashed.append(exc)

    thread = threading.Thread(target=target, daemon=True)
    thread.start()
    time.sleep(1.0)
    assert thread.is_alive()  # retrying with backoff, not dead
    stopper.set()
    thread.join(timeout=10)
    assert crashed == []


def test_cli_max_jobs_processes_one_and_exits(backend, tmp_path):
    url, user_token, worker_token = backend
    source = "#@ Output Object: answer\nanswer = 42\n"
    model_id = _upload(url, user_token, "CLI Once", source)
    execution_id = _run(url, user_token, model_id)
    subprocess.run(
        [
            sys.executable, "-m", "modelhub_script_worker.cli",
            "--url", url, "--token", worker_token,
            "--max-jobs", "1", "--poll-timeout", "2",
        ],
        check=True,
        timeout=60,
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    assert _wait_terminal(url, user_token, execution_id, timeout=5) == "success"
    results = requests.get(
        f"{url}/api/executions/{execution_id}/results/",
        headers=_headers(user_token),
        timeout=10,
    ).json()["results"]
    assert results["answer"] == 42
