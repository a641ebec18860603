"""Concurrency and lifecycle properties of the execution state machine."""

import threading
import time
from concurrent.futures import ThreadPoolExecutor

import pytest

from modelhub.lp.kernel import execute_native_job
from modelhub.server import ApiError
from modelhub.server.embedded import EmbeddedNativeWorker

from support import corpus_text

RANK = {"created": 0, "queued": 1, "running": 2, "success": 3, "error": 3}


def make_model(service, name="Dispatch", case=b"150 3 5"):
    record = service.create_model(
        "alice",
        filename="dispatch.mhl",
        data=corpus_text("dispatch.mhl").encode(),
        name=name,
        kernel_tag="native-lp",
    )
    service.set_interface_file("alice", record["id"], "case", "ieee14.m", case)
    return record["id"]


class SlowWorker(threading.Thread):
    """Claims jobs over the service API and solves them with a delay."""

    def __init__(self, service, delay=0.05):
        super().__init__(daemon=True)
        self.service = service
        self.delay = delay
        self.worker_id = service.register_worker(["native-lp"])["id"]
        self.done = threading.Event()

    def run(self):
        while not self.done.is_set():
            payload = self.service.next_job(self.worker_id, timeout=0.2)
            if payload is None:
                continue
            time.sleep(self.delay)
            status, results, lines = execute_native_job(payload)
            self.service.post_log(payload["execution_id"], lines)
            self.service.post_result(payload["execution_id"], status, results)

    def stop(self):
        self.done.set()
        self.join(timeout=5)


def observe_until_terminal(service, execution_id, out):
    seen = []
    deadline = time.time() + 20
    while time.time() < deadline:
        status = service.execution_record_unchecked(execution_id)["status"]
        if not seen or seen[-1] != status:
            seen.append(status)
        if status in ("success", "error"):
            break
        time.sleep(0.002)
    out[execution_id] = seen


def test_status_sequences_are_monotone_under_concurrency(service):
    workers = [SlowWorker(service, delay=0.03) for _ in range(2)]
    for w in workers:
        w.start()
    try:
        model_id = make_model(service)
        with ThreadPoolExecutor(max_workers=10) as pool:
            executions = [
                f.result()["id"]
                for f in [pool.submit(service.run, "alice", model_id) for _ in range(10)]
            ]
        sequences: dict = {}
        threads = [
            threading.Thread(target=observe_until_terminal, args=(service, e, sequences))
            for e in executions
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(sequences) == 10
        for execution_id, seen in sequences.items():
            ranks = [RANK[s] for s in seen]
            assert ranks == sorted(ranks), f"{execution_id} regressed: {seen}"
            assert seen[-1] == "success"
            assert len([s for s in seen if RANK[s] >= 3]) == 1
    finally:
        for w in workers:
            w.stop()


def strip_times(results):
    trimmed = {}
    for key, value in results.items():
        if isinstance(value, dict):
            trimmed[key] = {k: v for k, v in value.items() if k != "time"}
        else:
            trimmed[key] = value
    return trimmed


def test_mutating_inputs_after_enqueue_does_not_change_results(service):
    worker = EmbeddedNativeWorker(service, poll_timeout=0.1)
    worker.start()
    try:
        model_id = make_model(service, name="Racy", case=b"150 3 5")
        execution = service.run("alice", model_id)
        # mutate immediately, likely before the worker finishes
        service.set_interface_file("alice", model_id, "case", "other.m", b"60 9 1")
        service.set_interface_object("alice", model_id, "feastol", 0.5)

        control_id = make_model(service, name="Control", case=b"150 3 5")
        control = service.run("alice", control_id)

        def wait(execution_id):
            deadline = time.time() + 10
            while time.time() < deadline:
                row = service.execution_record_unchecked(execution_id)
                if row["status"] in ("success", "error"):
                    return row["status"]
                time.sleep(0.01)
            raise TimeoutError(execution_id)

        assert wait(execution["id"]) == "success"
        assert wait(control["id"]) == "success"
        racy = service.execution_results("alice", execution["id"])["results"]
        ref = service.execution_results("alice", control["id"])["results"]
        assert strip_times(racy) == strip_times(ref)
        assert racy["total_cost"] == pytest.approx(550.0)
    finally:
        worker.stop()
        worker.join(timeout=5)


def test_one_job_is_never_assigned_twice(service):
    model_id = make_model(service)
    worker_ids = [service.register_worker(["native-lp"])["id"] for _ in range(4)]
    service.run("alice", model_id)

    grabbed = []
    barrier = threading.Barrier(4)

    def poll(worker_id):
        barrier.wait()
        payload = service.next_job(worker_id, timeout=1.0)
        if payload is not None:
            grabbed.append((worker_id, payload["execution_id"]))

    threads = [threading.Thread(target=poll, args=(w,)) for w in worker_ids]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(grabbed) == 1


def test_duplicate_results_race_resolves_to_one_winner(service):
    model_id = make_model(service)
    worker_id = service.register_worker(["native-lp"])["id"]
    execution = service.run("alice", model_id)
    payload = service.next_job(worker_id, timeout=1.0)
    assert payload["execution_id"] == execution["id"]

    outcomes = []
    barrier = threading.Barrier(6)

    def finish(status):
        barrier.wait()
        try:
            service.post_result(execution["id"], status, {"who": status})
            outcomes.append("accepted")
        except ApiError as exc:
            outcomes.append(exc.code)

    threads = [
        threading.Thread(target=finish, args=("success" if i % 2 else "error",))
        for i in range(6)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert outcomes.count("accepted") == 1
    assert all(o == 409 for o in outcomes if o != "accepted")


def test_job_requeued_once_then_errored_on_heartbeat_loss(service):
    model_id = make_model(service)
    worker_id = service.register_worker(["native-lp"])["id"]
    service.run("alice", model_id)

    payload = service.next_job(worker_id, timeout=1.0)
    execution_id = payload["execution_id"]
    assert service.execution_record_unchecked(execution_id)["status"] == "running"

    def lapse(worker):
        with service.storage.connect() as con:
            con.execute(
                "UPDATE workers SET last_heartbeat = ? WHERE id = ?", (time.time() - 999, worker)
            )

    lapse(worker_id)
    assert service.reap_stale() == 1
    record = service.execution_record_unchecked(execution_id)
    assert record["status"] == "queued"
    assert record["worker_id"] is None

    second = service.register_worker(["native-lp"])["id"]
    payload = service.next_job(second, timeout=1.0)
    assert payload["execution_id"] == execution_id
    lapse(second)
    assert service.reap_stale() == 1
    record = service.execution_record_unchecked(execution_id)
    assert record["status"] == "error"
    log = service.execution_log("alice", execution_id)
    assert "requeued" in log and "failed" in log


def test_stale_workers_are_not_dispatch_targets(service):
    model_id = make_model(service)
    worker_id = service.register_worker(["native-lp"])["id"]
    with service.storage.connect() as con:
        con.execute(
            "UPDATE workers SET last_heartbeat = ? WHERE id = ?", (time.time() - 999, worker_id)
        )
    with pytest.raises(ApiError) as err:
        service.run("alice", model_id)
    assert err.value.code == 503
