"""Service operations behind the REST API.

Every status transition goes through a compare-and-set on the executions
table, so the lifecycle (queued -> running -> success | error) is monotone
under any interleaving of requests, worker messages, and requeues. The REST
layer, the embedded worker, and tests all call these methods.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import secrets
import sqlite3
import threading
import time
import uuid
from datetime import datetime, timezone
from typing import Optional

from ..annotations import ParserConfig, UnknownExtensionError, detect_comment_tag, parse
from ..core import ComponentKind, ModelManifest, build_recipe, validate
from ..lp import KERNEL_TAG as NATIVE_LP_TAG
from ..lp.script import ScriptError, parse_script
from .storage import Storage

QUEUED, RUNNING, SUCCESS, ERROR, CREATED = "queued", "running", "success", "error", "created"
TERMINAL = (SUCCESS, ERROR)

MAX_FILE_BYTES = 16 * 1024 * 1024


class ApiError(Exception):
    def __init__(self, code: int, message: str, detail=None):
        self.code = code
        self.message = message
        self.detail = detail
        super().__init__(message)

    def body(self) -> dict:
        err = {"code": self.code, "message": self.message}
        if self.detail is not None:
            err["detail"] = self.detail
        return {"error": err}


def _now() -> float:
    return time.time()


def _iso(ts: Optional[float]) -> Optional[str]:
    if ts is None:
        return None
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat()


def _new_id() -> str:
    return uuid.uuid4().hex


def classify_value(value) -> str:
    """Interface object values are scalars, numeric vectors, or text."""
    if isinstance(value, bool):
        raise ApiError(422, "interface values must be numbers, number lists, or text")
    if isinstance(value, (int, float)):
        return "scalar"
    if isinstance(value, str):
        return "text"
    if isinstance(value, list) and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return "vector"
    raise ApiError(422, "interface values must be numbers, number lists, or text")


class ModelHubService:
    def __init__(
        self,
        storage: Storage,
        *,
        worker_stale_seconds: float = 90.0,
        requeue_limit: int = 1,
        max_file_bytes: int = MAX_FILE_BYTES,
    ):
        self.storage = storage
        self.worker_stale_seconds = worker_stale_seconds
        self.requeue_limit = requeue_limit
        self.max_file_bytes = max_file_bytes
        self.queue_changed = threading.Condition()

    # -- tokens ----------------------------------------------------------------

    def create_token(self, user: str, kind: str = "user") -> str:
        if kind not in ("user", "worker"):
            raise ValueError("token kind must be 'user' or 'worker'")
        token = secrets.token_hex(20)  # 160 bits
        token_hash = hashlib.sha256(token.encode()).hexdigest()
        with self.storage.connect() as con:
            con.execute(
                "INSERT INTO tokens (token_hash, user, kind, created_at) VALUES (?, ?, ?, ?)",
                (token_hash, user, kind, _now()),
            )
        return token

    def authenticate(self, token: Optional[str], required_kind: str = "user") -> str:
        if not token:
            raise ApiError(401, "missing or malformed Authorization header")
        presented = hashlib.sha256(token.encode()).hexdigest()
        with self.storage.connect() as con:
            row = con.execute(
                "SELECT token_hash, user, kind FROM tokens WHERE token_hash = ?",
                (presented,),
            ).fetchone()
        if row is None or not hmac.compare_digest(row["token_hash"], presented):
            raise ApiError(401, "invalid token")
        if row["kind"] != required_kind:
            raise ApiError(403, f"a {required_kind}-class token is required")
        return row["user"]

    # -- models ----------------------------------------------------------------

    def create_model(
        self,
        owner: str,
        *,
        filename: str,
        data: bytes,
        name: str,
        kernel_tag: str,
        comment_tag: Optional[str] = None,
    ) -> dict:
        if not name:
            raise ApiError(422, "model name must not be empty")
        if not kernel_tag:
            raise ApiError(422, "kernel_tag must not be empty")
        if comment_tag:
            tag = comment_tag
        else:
            try:
                tag = detect_comment_tag(filename)
            except UnknownExtensionError as exc:
                raise ApiError(422, str(exc)) from None
        try:
            source = data.decode("utf-8")
        except UnicodeDecodeError:
            raise ApiError(422, "model source must be UTF-8 text") from None

        manifest, parse_diags = parse(source, ParserConfig(comment_tag=tag))
        if any(d.severity == "error" for d in parse_diags):
            raise ApiError(
                422,
                "model source has annotation errors",
                detail=[d.to_dict() for d in parse_diags if d.severity == "error"],
            )
        diagnostics = [d.to_dict() for d in parse_diags] + [
            d.to_dict() for d in validate(manifest)
        ]

        interface_values: dict = {}
        if kernel_tag == NATIVE_LP_TAG:
            try:
                template, _ = parse_script(manifest, source)
                for iname, value in template.default_values().items():
                    kind = "vector" if isinstance(value, list) else "scalar"
                    interface_values[iname] = {"kind": kind, "value": value}
            except ScriptError:
                pass  # script problems surface in the execution log at run time

        model_id = _new_id()
        record = {
            "id": model_id,
            "owner": owner,
            "name": name,
            "kernel_tag": kernel_tag,
            "comment_tag": tag,
            "source": source,
            "manifest_json": json.dumps(manifest.to_dict()),
            "diagnostics_json": json.dumps(diagnostics),
            "interface_json": json.dumps(interface_values),
            "created_at": _now(),
        }
        try:
            with self.storage.connect() as con:
                con.execute(
                    "INSERT INTO models (id, owner, name, kernel_tag, comment_tag, source,"
                    " manifest_json, diagnostics_json, interface_json, created_at)"
                    " VALUES (:id, :owner, :name, :kernel_tag, :comment_tag, :source,"
                    " :manifest_json, :diagnostics_json, :interface_json, :created_at)",
                    record,
                )
        except sqlite3.IntegrityError:
            raise ApiError(409, f"a model named {name!r} already exists") from None
        return self.model_record(owner, model_id)

    def _model_row(self, owner: str, model_id: str):
        with self.storage.connect() as con:
            row = con.execute(
                "SELECT * FROM models WHERE id = ? AND owner = ?", (model_id, owner)
            ).fetchone()
        if row is None:
            raise ApiError(404, "model not found")
        return row

    def _latest_execution(self, model_id: str):
        with self.storage.connect() as con:
            return con.execute(
                "SELECT * FROM executions WHERE model_id = ?"
                " ORDER BY created_at DESC, rowid DESC LIMIT 1",
                (model_id,),
            ).fetchone()

    def model_record(self, owner: str, model_id: str) -> dict:
        row = self._model_row(owner, model_id)
        latest = self._latest_execution(model_id)
        return {
            "id": row["id"],
            "name": row["name"],
            "owner": row["owner"],
            "kernel_tag": row["kernel_tag"],
            "comment_tag": row["comment_tag"],
            "created_at": _iso(row["created_at"]),
            "manifest": json.loads(row["manifest_json"]),
            "diagnostics": json.loads(row["diagnostics_json"]),
            "interface_values": json.loads(row["interface_json"]),
            "latest_status": latest["status"] if latest else CREATED,
        }

    def list_models(self, owner: str, name: Optional[str] = None) -> list[dict]:
        query = "SELECT id FROM models WHERE owner = ?"
        args: list = [owner]
        if name is not None:
            query += " AND name = ?"
            args.append(name)
        query += " ORDER BY created_at DESC, rowid DESC"
        with self.storage.connect() as con:
            ids = [r["id"] for r in con.execute(query, args)]
        summaries = []
        for mid in ids:
            record = self.model_record(owner, mid)
            summaries.append(
                {
                    "id": record["id"],
                    "name": record["name"],
                    "kernel_tag": record["kernel_tag"],
                    "created_at": record["created_at"],
                    "latest_status": record["latest_status"],
                }
            )
        return summaries

    def delete_model(self, owner: str, model_id: str) -> None:
        self._model_row(owner, model_id)
        with self.storage.connect() as con:
            con.execute("DELETE FROM models WHERE id = ? AND owner = ?", (model_id, owner))

    def model_source(self, owner: str, model_id: str) -> str:
        return self._model_row(owner, model_id)["source"]

    def components(self, owner: str, model_id: str) -> list[dict]:
        row = self._model_row(owner, model_id)
        manifest = ModelManifest.from_dict(json.loads(row["manifest_json"]))
        data = row["source"].encode("utf-8")
        return [
            {
                "kind": c.kind.value,
                "name": c.name,
                "description": c.description,
                "order": c.order,
                "span": {"start": c.span.start, "end": c.span.end},
                "text": data[c.span.start:c.span.end].decode("utf-8"),
            }
            for c in manifest.components
        ]

    def recipe(self, owner: str, model_id: str) -> dict:
        row = self._model_row(owner, model_id)
        manifest = ModelManifest.from_dict(json.loads(row["manifest_json"]))
        errors = [d for d in validate(manifest) if d.severity == "error"]
        if errors:
            raise ApiError(
                422,
                "model has validation errors; no recipe",
                detail=[d.to_dict() for d in errors],
            )
        return build_recipe(manifest).to_dict()

    # -- interface values --------------------------------------------------------

    def _component_kind(self, row, name: str) -> ComponentKind:
        manifest = ModelManifest.from_dict(json.loads(row["manifest_json"]))
        component = manifest.component_named(name)
        if component is None:
            raise ApiError(404, f"no component named {name!r}")
        return component.kind

    def _store_interface_value(self, model_id: str, name: str, doc: dict):
        with self.storage.connect() as con:
            values = json.loads(
                con.execute(
                    "SELECT interface_json FROM models WHERE id = ?", (model_id,)
                ).fetchone()["interface_json"]
            )
            values[name] = doc
            con.execute(
                "UPDATE models SET interface_json = ? WHERE id = ?",
                (json.dumps(values), model_id),
            )

    def set_interface_object(self, owner: str, model_id: str, name: str, value) -> dict:
        row = self._model_row(owner, model_id)
        kind = self._component_kind(row, name)
        if kind is not ComponentKind.INTERFACE_OBJECT:
            raise ApiError(422, f"component {name!r} is a {kind.value}, not an InterfaceObject")
        doc = {"kind": classify_value(value), "value": value}
        self._store_interface_value(model_id, name, doc)
        return self.model_record(owner, model_id)

    def set_interface_file(
        self, owner: str, model_id: str, name: str, filename: str, data: bytes
    ) -> dict:
        row = self._model_row(owner, model_id)
        kind = self._component_kind(row, name)
        if kind is not ComponentKind.INTERFACE_FILE:
            raise ApiError(422, f"component {name!r} is a {kind.value}, not an InterfaceFile")
        if len(data) > self.max_file_bytes:
            raise ApiError(413, f"file exceeds the {self.max_file_bytes} byte limit")
        digest = self.storage.save_blob(data)
        doc = {"kind": "file", "filename": filename, "sha256": digest, "size": len(data)}
        self._store_interface_value(model_id, name, doc)
        return self.model_record(owner, model_id)

    # -- executions ----------------------------------------------------------------

    def run(self, owner: str, model_id: str) -> dict:
        row = self._model_row(owner, model_id)
        manifest = ModelManifest.from_dict(json.loads(row["manifest_json"]))
        errors = [d for d in validate(manifest) if d.severity == "error"]
        if errors:
            raise ApiError(
                409,
                "model has validation errors and cannot run",
                detail=[d.to_dict() for d in errors],
            )
        interface_values = json.loads(row["interface_json"])
        recipe = build_recipe(manifest)
        missing = [n for n, _, _ in recipe.inputs if n not in interface_values]
        if missing:
            raise ApiError(409, "missing required inputs", detail=missing)

        execution_id = _new_id()
        snapshot = json.loads(json.dumps(interface_values))  # frozen copy
        if not self.has_fresh_worker(row["kernel_tag"]):
            with self.storage.connect() as con:
                con.execute(
                    "INSERT INTO executions (id, model_id, status, snapshot_json,"
                    " created_at, ended_at) VALUES (?, ?, ?, ?, ?, ?)",
                    (execution_id, model_id, ERROR, json.dumps(snapshot), _now(), _now()),
                )
            self._append_log(
                execution_id,
                [f"no worker registered for kernel tag {row['kernel_tag']!r}"],
                enforce_state=False,
            )
            raise ApiError(
                503,
                f"no worker registered for kernel tag {row['kernel_tag']!r}",
                detail={"execution_id": execution_id},
            )
        with self.storage.connect() as con:
            con.execute(
                "INSERT INTO executions (id, model_id, status, snapshot_json, created_at)"
                " VALUES (?, ?, ?, ?, ?)",
                (execution_id, model_id, QUEUED, json.dumps(snapshot), _now()),
            )
        with self.queue_changed:
            self.queue_changed.notify_all()
        return self.execution_record_unchecked(execution_id)

    def get_status(self, owner: str, model_id: str) -> dict:
        self._model_row(owner, model_id)
        latest = self._latest_execution(model_id)
        return {
            "status": latest["status"] if latest else CREATED,
            "execution_id": latest["id"] if latest else None,
        }

    def _execution_row(self, execution_id: str):
        with self.storage.connect() as con:
            row = con.execute(
                "SELECT * FROM executions WHERE id = ?", (execution_id,)
            ).fetchone()
        if row is None:
            raise ApiError(404, "execution not found")
        return row

    def _owned_execution_row(self, owner: str, execution_id: str):
        row = self._execution_row(execution_id)
        self._model_row(owner, row["model_id"])  # 404 when not visible
        return row

    def execution_record_unchecked(self, execution_id: str) -> dict:
        row = self._execution_row(execution_id)
        return {
            "id": row["id"],
            "model_id": row["model_id"],
            "status": row["status"],
            "input_snapshot": json.loads(row["snapshot_json"]),
            "created_at": _iso(row["created_at"]),
            "started_at": _iso(row["started_at"]),
            "ended_at": _iso(row["ended_at"]),
            "worker_id": row["worker_id"],
        }

    def execution_record(self, owner: str, execution_id: str) -> dict:
        self._owned_execution_row(owner, execution_id)
        return self.execution_record_unchecked(execution_id)

    def execution_log(self, owner: str, execution_id: str) -> str:
        self._owned_execution_row(owner, execution_id)
        with self.storage.connect() as con:
            rows = con.execute(
                "SELECT line FROM log_lines WHERE execution_id = ? ORDER BY seq",
                (execution_id,),
            ).fetchall()
        return "\n".join(r["line"] for r in rows)

    def execution_results(self, owner: str, execution_id: str) -> dict:
        row = self._owned_execution_row(owner, execution_id)
        if row["status"] not in TERMINAL:
            raise ApiError(409, f"execution is {row['status']}; results need a terminal status")
        results = json.loads(row["results_json"]) if row["results_json"] else {}
        return {"execution_id": execution_id, "status": row["status"], "results": results}

    # -- workers ----------------------------------------------------------------------

    def register_worker(self, kernel_tags: list[str]) -> dict:
        if not kernel_tags or not all(isinstance(t, str) and t for t in kernel_tags):
            raise ApiError(422, "kernel_tags must be a non-empty list of tags")
        worker_id = _new_id()
        with self.storage.connect() as con:
            con.execute(
                "INSERT INTO workers (id, kernel_tags_json, last_heartbeat) VALUES (?, ?, ?)",
                (worker_id, json.dumps(sorted(set(kernel_tags))), _now()),
            )
        return self.worker_record(worker_id)

    def worker_record(self, worker_id: str) -> dict:
        with self.storage.connect() as con:
            row = con.execute("SELECT * FROM workers WHERE id = ?", (worker_id,)).fetchone()
        if row is None:
            raise ApiError(404, "worker not found")
        return {
            "id": row["id"],
            "kernel_tags": json.loads(row["kernel_tags_json"]),
            "last_heartbeat": _iso(row["last_heartbeat"]),
            "active_job": row["active_job"],
        }

    def heartbeat(self, worker_id: str) -> None:
        with self.storage.connect() as con:
            updated = con.execute(
                "UPDATE workers SET last_heartbeat = ? WHERE id = ?", (_now(), worker_id)
            ).rowcount
        if not updated:
            raise ApiError(404, "worker not found")

    def has_fresh_worker(self, kernel_tag: str) -> bool:
        horizon = _now() - self.worker_stale_seconds
        with self.storage.connect() as con:
            rows = con.execute(
                "SELECT kernel_tags_json FROM workers WHERE last_heartbeat >= ?",
                (horizon,),
            ).fetchall()
        return any(kernel_tag in json.loads(r["kernel_tags_json"]) for r in rows)

    def _try_claim(self, worker_id: str, tags: list[str]) -> Optional[str]:
        placeholders = ",".join("?" for _ in tags)
        with self.storage.connect() as con:
            while True:
                row = con.execute(
                    f"""SELECT e.id FROM executions e JOIN models m ON m.id = e.model_id
                        WHERE e.status = ? AND m.kernel_tag IN ({placeholders})
                        ORDER BY e.created_at ASC, e.rowid ASC LIMIT 1""",
                    [QUEUED, *tags],
                ).fetchone()
                if row is None:
                    return None
                claimed = con.execute(
                    "UPDATE executions SET status = ?, worker_id = ?, started_at = ?"
                    " WHERE id = ? AND status = ?",
                    (RUNNING, worker_id, _now(), row["id"], QUEUED),
                ).rowcount
                if claimed:
                    con.execute(
                        "UPDATE workers SET active_job = ?, last_heartbeat = ? WHERE id = ?",
                        (row["id"], _now(), worker_id),
                    )
                    return row["id"]
                # lost the race; look for another queued job

    def job_payload(self, execution_id: str) -> dict:
        row = self._execution_row(execution_id)
        with self.storage.connect() as con:
            model = con.execute(
                "SELECT * FROM models WHERE id = ?", (row["model_id"],)
            ).fetchone()
        snapshot = json.loads(row["snapshot_json"])
        attached = []
        for name, doc in snapshot.items():
            if doc.get("kind") == "file":
                data = self.storage.load_blob(doc["sha256"])
                attached.append(
                    {
                        "name": name,
                        "filename": doc.get("filename", name),
                        "content_b64": base64.b64encode(data).decode(),
                    }
                )
        return {
            "execution_id": execution_id,
            "model_id": row["model_id"],
            "kernel_tag": model["kernel_tag"],
            "source": model["source"],
            "manifest": json.loads(model["manifest_json"]),
            "inputs": snapshot,
            "attached_files": attached,
        }

    def next_job(self, worker_id: str, timeout: float = 30.0) -> Optional[dict]:
        record = self.worker_record(worker_id)
        self.heartbeat(worker_id)
        tags = record["kernel_tags"]
        deadline = time.monotonic() + max(0.0, timeout)
        while True:
            claimed = self._try_claim(worker_id, tags)
            if claimed:
                return self.job_payload(claimed)
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            with self.queue_changed:
                self.queue_changed.wait(min(0.5, remaining))

    def _append_log(self, execution_id: str, lines: list[str], enforce_state: bool = True):
        with self.storage.connect() as con:
            row = con.execute(
                "SELECT status FROM executions WHERE id = ?", (execution_id,)
            ).fetchone()
            if row is None:
                raise ApiError(404, "execution not found")
            if enforce_state and row["status"] not in (QUEUED, RUNNING):
                raise ApiError(409, f"log is closed; execution is {row['status']}")
            seq = con.execute(
                "SELECT COALESCE(MAX(seq), -1) + 1 AS next FROM log_lines WHERE execution_id = ?",
                (execution_id,),
            ).fetchone()["next"]
            con.executemany(
                "INSERT INTO log_lines (execution_id, seq, line) VALUES (?, ?, ?)",
                [(execution_id, seq + i, line) for i, line in enumerate(lines)],
            )

    def post_log(self, execution_id: str, lines: list[str]) -> int:
        if not isinstance(lines, list) or not all(isinstance(x, str) for x in lines):
            raise ApiError(422, "lines must be a list of strings")
        self._append_log(execution_id, lines)
        return len(lines)

    def post_result(self, execution_id: str, status: str, results: Optional[dict]) -> dict:
        if status not in TERMINAL:
            raise ApiError(422, f"result status must be one of {TERMINAL}")
        if results is None:
            results = {}
        if not isinstance(results, dict):
            raise ApiError(422, "results must be an object keyed by component name")
        if status == ERROR:
            results = {}
        row = self._execution_row(execution_id)
        with self.storage.connect() as con:
            moved = con.execute(
                "UPDATE executions SET status = ?, results_json = ?, ended_at = ?"
                " WHERE id = ? AND status = ?",
                (status, json.dumps(results), _now(), execution_id, RUNNING),
            ).rowcount
            if moved and row["worker_id"]:
                con.execute(
                    "UPDATE workers SET active_job = NULL, last_heartbeat = ?"
                    " WHERE id = ? AND active_job = ?",
                    (_now(), row["worker_id"], execution_id),
                )
        if not moved:
            current = self._execution_row(execution_id)["status"]
            raise ApiError(409, f"execution is {current}; result not accepted")
        return self.execution_record_unchecked(execution_id)

    # -- maintenance --------------------------------------------------------------------

    def reap_stale(self) -> int:
        """Requeue (once) or fail running jobs whose worker went silent."""
        horizon = _now() - self.worker_stale_seconds
        moved = 0
        with self.storage.connect() as con:
            rows = con.execute(
                """SELECT e.id, e.requeue_count, e.worker_id FROM executions e
                   JOIN workers w ON w.id = e.worker_id
                   WHERE e.status = ? AND w.last_heartbeat < ?""",
                (RUNNING, horizon),
            ).fetchall()
        for row in rows:
            if row["requeue_count"] < self.requeue_limit:
                with self.storage.connect() as con:
                    changed = con.execute(
                        "UPDATE executions SET status = ?, worker_id = NULL, started_at = NULL,"
                        " requeue_count = requeue_count + 1 WHERE id = ? AND status = ?",
                        (QUEUED, row["id"], RUNNING),
                    ).rowcount
                if changed:
                    self._append_log(
                        row["id"], ["worker heartbeat lost; job requeued"], enforce_state=False
                    )
                    moved += 1
            else:
                # log first: once terminal, the log is closed
                self._append_log(
                    row["id"],
                    ["worker heartbeat lost again; execution failed"],
                    enforce_state=False,
                )
                with self.storage.connect() as con:
                    changed = con.execute(
                        "UPDATE executions SET status = ?, ended_at = ? WHERE id = ? AND status = ?",
                        (ERROR, _now(), row["id"], RUNNING),
                    ).rowcount
                if changed:
                    moved += 1
            with self.storage.connect() as con:
                con.execute(
                    "UPDATE workers SET active_job = NULL WHERE id = ? AND active_job = ?",
                    (row["worker_id"], row["id"]),
                )
        if moved:
            with self.queue_changed:
                self.queue_changed.notify_all()
        return moved
