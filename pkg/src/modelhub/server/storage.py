"""Embedded persistence: a SQLite database plus content-addressed blobs.

Connections are opened per operation; SQLite's WAL mode plus a busy timeout
serializes writers across request threads. Uploaded files live outside the
database, keyed by content hash, so interface-file snapshots stay immutable
when a file is replaced.
"""

from __future__ import annotations

import hashlib
import sqlite3
from contextlib import contextmanager
from pathlib import Path

_SCHEMA = """
CREATE TABLE IF NOT EXISTS tokens (
    token_hash TEXT PRIMARY KEY,
    user TEXT NOT NULL,
    kind TEXT NOT NULL DEFAULT 'user',
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS models (
    id TEXT PRIMARY KEY,
    owner TEXT NOT NULL,
    name TEXT NOT NULL,
    kernel_tag TEXT NOT NULL,
    comment_tag TEXT NOT NULL,
    source TEXT NOT NULL,
    manifest_json TEXT NOT NULL,
    diagnostics_json TEXT NOT NULL,
    interface_json TEXT NOT NULL,
    created_at REAL NOT NULL,
    UNIQUE (owner, name)
);
CREATE TABLE IF NOT EXISTS executions (
    id TEXT PRIMARY KEY,
    model_id TEXT NOT NULL REFERENCES models(id) ON DELETE CASCADE,
    status TEXT NOT NULL,
    snapshot_json TEXT NOT NULL,
    results_json TEXT,
    created_at REAL NOT NULL,
    started_at REAL,
    ended_at REAL,
    worker_id TEXT,
    requeue_count INTEGER NOT NULL DEFAULT 0
);
CREATE INDEX IF NOT EXISTS idx_executions_model ON executions(model_id, created_at);
CREATE INDEX IF NOT EXISTS idx_executions_status ON executions(status);
CREATE TABLE IF NOT EXISTS log_lines (
    execution_id TEXT NOT NULL REFERENCES executions(id) ON DELETE CASCADE,
    seq INTEGER NOT NULL,
    line TEXT NOT NULL,
    PRIMARY KEY (execution_id, seq)
);
CREATE TABLE IF NOT EXISTS workers (
    id TEXT PRIMARY KEY,
    kernel_tags_json TEXT NOT NULL,
    last_heartbeat REAL NOT NULL,
    active_job TEXT
);
"""


class Storage:
    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.blob_dir = self.data_dir / "blobs"
        self.blob_dir.mkdir(exist_ok=True)
        self.db_path = self.data_dir / "modelhub.db"
        with self.connect() as con:
            con.execute("PRAGMA journal_mode=WAL")
            con.executescript(_SCHEMA)

    @contextmanager
    def connect(self):
        con = sqlite3.connect(self.db_path, timeout=10.0)
        con.row_factory = sqlite3.Row
        con.execute("PRAGMA foreign_keys=ON")
        try:
            yield con
            con.commit()
        except BaseException:
            con.rollback()
            raise
        finally:
            con.close()

    # -- blobs ---------------------------------------------------------------

    def save_blob(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self.blob_dir / digest
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        return digest

    def load_blob(self, digest: str) -> bytes:
        path = self.blob_dir / digest
        if not path.exists():
            raise FileNotFoundError(f"blob {digest} missing")
        return path.read_bytes()
