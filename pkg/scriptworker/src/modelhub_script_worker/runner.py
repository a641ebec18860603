"""Executes one annotated script job in a fresh child process.

Each job gets its own temporary working directory with the attached files
materialized under their interface names. Interface-object values are
injected as predefined globals, the script runs top to bottom, and every
annotated component's value is read back by name afterwards. Stdout and
stderr become the execution log.
"""

from __future__ import annotations

import base64
import json
import subprocess
import sys
import tempfile
import threading
import time
from pathlib import Path
from typing import Callable, Optional

DEFAULT_TIMEOUT = 300.0
_FLUSH_INTERVAL = 1.0

_BOOTSTRAP = r'''
import json
import sys
import traceback

def _serializable(value):
    try:
        json.dumps(value)
        return True, value
    except (TypeError, ValueError, OverflowError):
        pass
    if hasattr(value, "tolist"):
        try:
            converted = value.tolist()
            json.dumps(converted)
            return True, converted
        except (TypeError, ValueError, OverflowError):
            pass
    if isinstance(value, (tuple, set, frozenset)):
        try:
            converted = list(value)
            json.dumps(converted)
            return True, converted
        except (TypeError, ValueError, OverflowError):
            pass
    return False, None

def main():
    with open(sys.argv[1], encoding="utf-8") as fh:
        context = json.load(fh)
    with open(context["script"], encoding="utf-8") as fh:
        source = fh.read()

    scope = {"__name__": "__main__"}
    scope.update(context["inputs"])
    code = compile(source, context.get("script_name", "<model>"), "exec")
    exec(code, scope)

    report = {"values": {}, "missing": [], "unserializable": []}
    for component in context["components"]:
        name = component["name"]
        if name not in scope:
            report["missing"].append(name)
            continue
        ok, converted = _serializable(scope[name])
        if ok:
            report["values"][name] = converted
        elif component["kind"] in ("OutputObject", "OutputFile"):
            report["unserializable"].append(name)
        else:
            report["values"][name] = f"<{type(scope[name]).__name__}>"
    with open(context["report"], "w", encoding="utf-8") as fh:
        json.dump(report, fh)

if __name__ == "__main__":
    try:
        main()
    except SystemExit:
        raise
    except BaseException:
        traceback.print_exc()
        sys.exit(1)
'''


def execute(
    payload: dict,
    timeout: float = DEFAULT_TIMEOUT,
    log_callback: Optional[Callable[[list[str]], None]] = None,
) -> tuple[str, dict, list[str]]:
    """Run one job payload. Returns (status, results, log lines).

    ``log_callback``, when given, receives batches of log lines roughly once
    per second while the script runs (order preserved).
    """
    log: list[str] = []
    pending: list[str] = []
    lock = threading.Lock()

    def emit(lines: list[str]):
        with lock:
            log.extend(lines)
            pending.extend(lines)

    def flush():
        if log_callback is None:
            return
        with lock:
            batch, pending[:] = list(pending), []
        if batch:
            try:
                log_callback(batch)
            except Exception:
                pass  # log delivery must never kill the job

    with tempfile.TemporaryDirectory(prefix="modelhub-job-") as tmp:
        workdir = Path(tmp)
        script_path = workdir / "_model_script.py"
        script_path.write_text(payload["source"], encoding="utf-8")

        for attachment in payload.get("attached_files", []):
            target = workdir / attachment["name"]
            target.write_bytes(base64.b64decode(attachment["content_b64"]))

        inputs = {}
        for name, doc in payload.get("inputs", {}).items():
            if doc.get("kind") == "file":
                continue  # files exist on disk under their interface names
            inputs[name] = doc.get("value")

        components = [
            {"name": c["name"], "kind": c["kind"]}
            for c in payload.get("manifest", {}).get("components", [])
        ]
        report_path = workdir / "_report.json"
        context_path = workdir / "_context.json"
        context_path.write_text(
            json.dumps(
                {
                    "script": str(script_path),
                    "script_name": "model-script",
                    "report": str(report_path),
                    "inputs": inputs,
                    "components": components,
                }
            ),
            encoding="utf-8",
        )
        bootstrap_path = workdir / "_bootstrap.py"
        bootstrap_path.write_text(_BOOTSTRAP, encoding="utf-8")

        emit([f"[script] starting in fresh working directory with {len(components)} components"])
        flush()
        proc = subprocess.Popen(
            [sys.executable, str(bootstrap_path), str(context_path)],
            cwd=workdir,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            text=True,
        )

        reader_done = threading.Event()

        def read_output():
            for line in proc.stdout:
                emit([line.rstrip("\n")])
            reader_done.set()

        reader = threading.Thread(target=read_output, daemon=True)
        reader.start()

        deadline = time.monotonic() + timeout
        last_flush = time.monotonic()
        timed_out = False
        while True:
            if proc.poll() is not None:
                break
            if time.monotonic() >= deadline:
                timed_out = True
                proc.kill()
                proc.wait()
                break
            if time.monotonic() - last_flush >= _FLUSH_INTERVAL:
                flush()
                last_flush = time.monotonic()
            time.sleep(0.05)
        reader_done.wait(timeout=5)
        reader.join(timeout=5)

        if timed_out:
            emit([f"[script] killed: exceeded {timeout:g}s wall-clock limit"])
            flush()
            return "error", {}, log
        if proc.returncode != 0:
            emit([f"[script] exited with status {proc.returncode}"])
            flush()
            return "error", {}, log

        try:
            report = json.loads(report_path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            emit([f"[script] no component report produced: {exc}"])
            flush()
            return "error", {}, log

        for name in report["missing"]:
            emit([f"[script] warning: component {name!r} has no value after execution; omitted"])
        for name in report["unserializable"]:
            emit([f"[script] warning: output object {name!r} is not serializable; omitted"])
        emit([f"[script] finished; captured {len(report['values'])} component values"])
        flush()
        return "success", report["values"], log
