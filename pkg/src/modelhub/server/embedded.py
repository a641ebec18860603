"""Background threads: the in-process native-lp worker and the job reaper.

The embedded worker speaks the same claim/log/result operations as external
workers, just without HTTP in between, so a single process can serve the
whole pipeline.
"""

from __future__ import annotations

import logging
import threading

from ..lp import KERNEL_TAG as NATIVE_LP_TAG
from ..lp.kernel import execute_native_job
from .service import ApiError, ModelHubService

log = logging.getLogger(__name__)


class EmbeddedNativeWorker(threading.Thread):
    def __init__(self, service: ModelHubService, poll_timeout: float = 1.0):
        super().__init__(name="embedded-native-lp", daemon=True)
        self.service = service
        self.poll_timeout = poll_timeout
        self._halt = threading.Event()
        self.worker_id = service.register_worker([NATIVE_LP_TAG])["id"]

    def stop(self):
        self._halt.set()
        with self.service.queue_changed:
            self.service.queue_changed.notify_all()

    def run(self):
        while not self._halt.is_set():
            try:
                payload = self.service.next_job(self.worker_id, timeout=self.poll_timeout)
                if payload is None:
                    continue
                status, results, lines = execute_native_job(payload)
                execution_id = payload["execution_id"]
                try:
                    self.service.post_log(execution_id, lines)
                except ApiError:
                    pass  # execution got requeued or failed underneath us
                self.service.post_result(execution_id, status, results)
            except ApiError as exc:
                log.warning("embedded worker: %s", exc)
            except Exception:  # pragma: no cover - keep the worker alive
                log.exception("embedded worker crashed on a job")


class ReaperThread(threading.Thread):
    """Requeues or fails jobs whose worker stopped heartbeating."""

    def __init__(self, service: ModelHubService, interval: float = 5.0):
        super().__init__(name="execution-reaper", daemon=True)
        self.service = service
        self.interval = interval
        self._halt = threading.Event()

    def stop(self):
        self._halt.set()

    def run(self):
        while not self._halt.wait(self.interval):
            try:
                self.service.reap_stale()
            except Exception:  # pragma: no cover
                log.exception("reaper pass failed")
