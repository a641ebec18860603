"""Native LP kernel: executes a self-contained job payload.

Shared by the in-process embedded worker and by any external worker that
wants to run ``native-lp`` jobs. A job payload carries the model source, its
manifest, the frozen input snapshot, and any attached files; nothing else is
needed to solve.
"""

from __future__ import annotations

import base64

from ..core import ModelManifest
from .problem import STATUS_OPTIMAL
from .script import ScriptError, evaluate_outputs, instantiate, parse_script
from .simplex import solve


def payload_inputs(payload: dict) -> dict:
    """Flatten snapshot value docs into plain values for instantiate()."""
    files = {
        f["name"]: base64.b64decode(f["content_b64"])
        for f in payload.get("attached_files", [])
    }
    out = {}
    for name, doc in payload.get("inputs", {}).items():
        kind = doc.get("kind")
        if kind == "file":
            if name in files:
                out[name] = files[name]
        else:
            out[name] = doc.get("value")
    return out


def execute_native_job(payload: dict) -> tuple[str, dict, list[str]]:
    """Run one native-lp job. Returns (status, results, log lines)."""
    log: list[str] = ["[native-lp] parsing model script"]
    try:
        manifest = ModelManifest.from_dict(payload["manifest"])
        template, _ = parse_script(manifest, payload["source"])
        for w in template.warnings:
            log.append(f"[native-lp] warning: {w}")
        inputs = payload_inputs(payload)
        instance = instantiate(template, inputs)
        p = instance.problem
        log.append(
            f"[native-lp] instantiated: {p.n} variables, {p.m} rows, "
            f"feastol={instance.params.feastol:g}, maxiter={instance.params.maxiter}"
        )
        solution = solve(p, instance.params)
        log.append(
            f"[native-lp] solve finished: {solution.status} "
            f"after {solution.iterations} pivots in {solution.info['time']}s"
        )
        if solution.status == STATUS_OPTIMAL:
            results = evaluate_outputs(instance, solution)
            log.append(f"[native-lp] objective = {solution.objective:.12g}")
        else:
            # Not an error: the solve itself completed; report solver status.
            results = {name: dict(solution.info) for name in template.executions}
            log.append("[native-lp] no optimal point; outputs skipped")
        return "success", results, log
    except ScriptError as exc:
        log.append(f"[native-lp] model error: {exc}")
        return "error", {}, log
    except Exception as exc:  # noqa: BLE001 - worker must never crash on a job
        log.append(f"[native-lp] internal error: {type(exc).__name__}: {exc}")
        return "error", {}, log
