"""Programmatic client for the ModelHub REST API.

Mirrors the server's endpoints one-to-one: resolve a model by name, set its
interface values, run it, and read status, log, and results back. ``run``
blocks by default, polling until the execution reaches a terminal status.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import Optional
from urllib.parse import urlsplit

import requests

TERMINAL = ("success", "error")


class ClientError(Exception):
    def __init__(self, code: Optional[int], message: str, detail=None):
        self.code = code
        self.detail = detail
        super().__init__(message)


class NotFoundError(ClientError):
    def __init__(self, message: str, detail=None):
        super().__init__(404, message, detail)


class WaitTimeout(ClientError):
    def __init__(self, execution_id: str, waited: float):
        self.execution_id = execution_id
        super().__init__(None, f"execution {execution_id} still not terminal after {waited:.1f}s")


def _normalize_base_url(url: str) -> str:
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise ValueError(f"base url must look like http(s)://host[:port], got {url!r}")
    if parts.path not in ("", "/") or parts.query or parts.fragment:
        raise ValueError("base url must not carry a path, query, or fragment")
    return f"{parts.scheme}://{parts.netloc}"


class Interface:
    def __init__(self, url: str, token: str, poll_interval: float = 0.5, timeout: float = 600.0):
        self.base_url = _normalize_base_url(url)
        self.poll_interval = poll_interval
        self.timeout = timeout
        self.session = requests.Session()
        self.session.headers["Authorization"] = f"Token {token}"

    # -- transport -------------------------------------------------------------

    def request(self, method: str, path: str, **kwargs):
        """One API call. Idempotent GETs retry on transport failure."""
        url = self.base_url + path
        attempts = 3 if method.upper() == "GET" else 1
        last_exc = None
        for attempt in range(attempts):
            try:
                response = self.session.request(method, url, timeout=30, **kwargs)
                break
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_exc = exc
                if attempt + 1 < attempts:
                    time.sleep(0.1 * (attempt + 1))
        else:
            raise ClientError(None, f"cannot reach {url}: {last_exc}")
        if response.status_code >= 400:
            try:
                err = response.json()["error"]
                message, detail = err.get("message", response.text), err.get("detail")
            except (ValueError, KeyError):
                message, detail = response.text, None
            if response.status_code == 404:
                raise NotFoundError(message, detail)
            raise ClientError(response.status_code, message, detail)
        if response.status_code == 204 or not response.content:
            return None
        return response.json()

    # -- models ------------------------------------------------------------------

    def get_model_with_name(self, name: str) -> "ModelHandle":
        matches = self.request("GET", "/api/models/", params={"name": name})
        if not matches:
            raise NotFoundError(f"no model named {name!r}")
        return ModelHandle(self, matches[0]["id"])

    def new_model(
        self,
        path: str,
        name: str,
        kernel_tag: str,
        comment_tag: Optional[str] = None,
    ) -> "ModelHandle":
        p = Path(path)
        data = {"name": name, "kernel_tag": kernel_tag}
        if comment_tag:
            data["comment_tag"] = comment_tag
        with p.open("rb") as fh:
            record = self.request(
                "POST", "/api/models/", data=data, files={"file": (p.name, fh)}
            )
        return ModelHandle(self, record["id"], record)

    def list_models(self) -> list[dict]:
        return self.request("GET", "/api/models/")


class ModelHandle:
    """One model, addressed by id; caches its record between mutations."""

    def __init__(self, interface: Interface, model_id: str, record: Optional[dict] = None):
        self.interface = interface
        self.id = model_id
        self.record = record or self.refresh()

    def refresh(self) -> dict:
        self.record = self.interface.request("GET", f"/api/models/{self.id}/")
        return self.record

    @property
    def manifest(self) -> dict:
        return self.record["manifest"]

    def set_interface_object(self, name: str, value) -> None:
        self.record = self.interface.request(
            "PUT", f"/api/models/{self.id}/interface/objects/{name}/", json={"value": value}
        )

    def set_interface_file(self, name: str, path: str) -> None:
        p = Path(path)
        with p.open("rb") as fh:
            self.record = self.interface.request(
                "PUT",
                f"/api/models/{self.id}/interface/files/{name}/",
                files={"file": (p.name, fh)},
            )

    def show_recipe(self) -> str:
        recipe = self.interface.request("GET", f"/api/models/{self.id}/recipe/")
        lines = ["Inputs:"]
        for item in recipe["inputs"] or []:
            lines.append(_describe(item))
        if not recipe["inputs"]:
            lines.append("  (none)")
        lines.append("Outputs:")
        for item in recipe["outputs"] or []:
            lines.append(_describe(item))
        if not recipe["outputs"]:
            lines.append("  (none)")
        chain = " -> ".join(recipe["solve_chain"]) or "(none)"
        lines.append(f"Solve chain: {chain}")
        return "\n".join(lines)

    def show_components(self) -> str:
        doc = self.interface.request("GET", f"/api/models/{self.id}/components/")
        rows = [
            (c["kind"], c["name"], c["description"] or "") for c in doc["components"]
        ]
        if not rows:
            return "(no components)"
        kind_w = max(len(r[0]) for r in rows)
        name_w = max(len(r[1]) for r in rows)
        return "\n".join(
            f"{kind.ljust(kind_w)}  {name.ljust(name_w)}  {desc}".rstrip()
            for kind, name, desc in rows
        )

    def run(self, wait: bool = True) -> dict:
        execution = self.interface.request("POST", f"/api/models/{self.id}/run/")
        if not wait:
            return execution
        deadline = time.monotonic() + self.interface.timeout
        while True:
            record = self.interface.request("GET", f"/api/executions/{execution['id']}/")
            if record["status"] in TERMINAL:
                return record
            if time.monotonic() >= deadline:
                raise WaitTimeout(execution["id"], self.interface.timeout)
            time.sleep(self.interface.poll_interval)

    def get_status(self) -> str:
        return self.interface.request("GET", f"/api/models/{self.id}/status/")["status"]

    def latest_execution_id(self) -> str:
        status = self.interface.request("GET", f"/api/models/{self.id}/status/")
        if not status["execution_id"]:
            raise NotFoundError("model has no executions yet")
        return status["execution_id"]

    def get_execution_log(self) -> str:
        execution_id = self.latest_execution_id()
        doc = self.interface.request("GET", f"/api/executions/{execution_id}/log/")
        return doc["log"]

    def get_results(self) -> dict:
        execution_id = self.latest_execution_id()
        return self.interface.request("GET", f"/api/executions/{execution_id}/results/")

    def get_output(self, component_name: str):
        results = self.get_results()["results"]
        if component_name not in results:
            raise NotFoundError(f"no result for component {component_name!r}")
        return results[component_name]

    def delete(self) -> None:
        self.interface.request("DELETE", f"/api/models/{self.id}/")


def _describe(item: dict) -> str:
    desc = f" - {item['description']}" if item.get("description") else ""
    return f"  {item['name']} ({item['kind']}){desc}"
