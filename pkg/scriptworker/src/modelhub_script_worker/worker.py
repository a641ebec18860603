"""Long-polling worker loop speaking the backend's worker REST protocol.

Registers under the ``script`` kernel tag, claims jobs, streams log batches
while a job runs, and posts the final result exactly once. Transport loss is
retried with exponential backoff; the loop never crashes on a bad job.
"""

from __future__ import annotations

import logging
import threading
import time
from typing import Optional

import requests

from .runner import DEFAULT_TIMEOUT, execute

log = logging.getLogger("modelhub_script_worker")

KERNEL_TAG = "script"
HEARTBEAT_INTERVAL = 30.0
POLL_TIMEOUT = 30.0
BACKOFF_MAX = 30.0


class Backend:
    """Thin REST wrapper around the documented worker endpoints."""

    def __init__(self, base_url: str, token: str):
        self.base_url = base_url.rstrip("/")
        self.session = requests.Session()
        self.session.headers["Authorization"] = f"Token {token}"

    def register(self, kernel_tags: list[str]) -> str:
        r = self.session.post(
            f"{self.base_url}/api/workers/register/",
            json={"kernel_tags": kernel_tags},
            timeout=15,
        )
        r.raise_for_status()
        return r.json()["id"]

    def next_job(self, worker_id: str, timeout: float) -> Optional[dict]:
        r = self.session.get(
            f"{self.base_url}/api/workers/{worker_id}/jobs/next/",
            params={"timeout": timeout},
            timeout=timeout + 15,
        )
        if r.status_code == 204:
            return None
        r.raise_for_status()
        return r.json()

    def heartbeat(self, worker_id: str) -> None:
        r = self.session.post(
            f"{self.base_url}/api/workers/{worker_id}/heartbeat/", timeout=15
        )
        r.raise_for_status()

    def post_log(self, execution_id: str, lines: list[str]) -> None:
        r = self.session.post(
            f"{self.base_url}/api/executions/{execution_id}/log/",
            json={"lines": lines},
            timeout=15,
        )
        if r.status_code != 409:  # log already closed: job was taken away
            r.raise_for_status()

    def post_result(self, execution_id: str, status: str, results: dict) -> bool:
        r = self.session.post(
            f"{self.base_url}/api/executions/{execution_id}/result/",
            json={"status": status, "results": results},
            timeout=15,
        )
        if r.status_code == 409:
            return False
        r.raise_for_status()
        return True


def serve(
    url: str,
    token: str,
    *,
    kernel_tag: str = KERNEL_TAG,
    job_timeout: float = DEFAULT_TIMEOUT,
    poll_timeout: float = POLL_TIMEOUT,
    heartbeat_interval: float = HEARTBEAT_INTERVAL,
    max_jobs: Optional[int] = None,
    stop_event: Optional[threading.Event] = None,
    ready_event: Optional[threading.Event] = None,
) -> int:
    """Poll for jobs until stopped; returns the number of jobs executed."""
    stop = stop_event or threading.Event()
    backend = Backend(url, token)
    executed = 0
    backoff = 0.5

    worker_id = None
    heartbeat_thread = None

    def heartbeats():
        while not stop.wait(heartbeat_interval):
            try:
                backend.heartbeat(worker_id)
            except requests.RequestException as exc:
                log.warning("heartbeat failed: %s", exc)

    while not stop.is_set():
        try:
            if worker_id is None:
                worker_id = backend.register([kernel_tag])
                log.info("registered as worker %s for tag %r", worker_id, kernel_tag)
                if ready_event is not None:
                    ready_event.set()
                if heartbeat_thread is None:
                    heartbeat_thread = threading.Thread(target=heartbeats, daemon=True)
                    heartbeat_thread.start()
            payload = backend.next_job(worker_id, poll_timeout)
            backoff = 0.5
            if payload is None:
                continue
            execution_id = payload["execution_id"]
            log.info("executing job %s", execution_id)
            status, results, _ = execute(
                payload,
                timeout=job_timeout,
                log_callback=lambda lines: backend.post_log(execution_id, lines),
            )
            if not backend.post_result(execution_id, status, results):
                log.warning("result for %s rejected (already terminal)", execution_id)
            executed += 1
            if max_jobs is not None and executed >= max_jobs:
                return executed
        except requests.HTTPError as exc:
            if exc.response is not None and exc.response.status_code == 404:
                log.warning("worker registration lost; re-registering")
                worker_id = None
                continue
            log.warning("backend error: %s; backing off %.1fs", exc, backoff)
            stop.wait(backoff)
            backoff = min(backoff * 2, BACKOFF_MAX)
        except requests.RequestException as exc:
            log.warning("backend unreachable: %s; backing off %.1fs", exc, backoff)
            stop.wait(backoff)
            backoff = min(backoff * 2, BACKOFF_MAX)
    return executed
