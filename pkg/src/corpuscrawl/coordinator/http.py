"""JSON-over-HTTP front end for the coordinator, and the matching client.

Routes::

    POST /resources                 {kind, payload}        -> {id, created}
    POST /resources/next            {kind, worker_id}      -> {resource: {...} | null}
    POST /resources/<id>/complete   {worker_id, result}    -> {ok} | 409 | 422
    GET  /stats                                            -> {kind: {not_started, in_progress, done}}
"""
from __future__ import annotations

import json
import logging
import re
import threading
import urllib.error
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional, Tuple

from ..errors import (CorpusCrawlError, InvalidStateError, NotFoundError, StaleLeaseError,
                      ValidationError)
from .core import Coordinator, Resource, ResourceKind, ResourceState

log = logging.getLogger(__name__)

_COMPLETE = re.compile(r"^/resources/([^/]+)/complete$")

_STATUS = {
    ValidationError: 400,
    NotFoundError: 404,
    StaleLeaseError: 409,
    InvalidStateError: 422,
}


def _status_for(exc: Exception) -> int:
    for cls, code in _STATUS.items():
        if isinstance(exc, cls):
            return code
    return 500


class _Handler(BaseHTTPRequestHandler):
    coordinator: Coordinator = None  # set on the per-server subclass
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def _send(self, code: int, body: dict):
        data = json.dumps(body, ensure_ascii=False).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _body(self) -> dict:
        n = int(self.headers.get("Content-Length") or 0)
        if not n:
            return {}
        try:
            body = json.loads(self.rfile.read(n).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValidationError(f"bad JSON body: {exc}") from None
        if not isinstance(body, dict):
            raise ValidationError("JSON body must be an object")
        return body

    def _dispatch(self, fn):
        try:
            code, body = fn()
        except CorpusCrawlError as exc:
            code, body = _status_for(exc), {"error": type(exc).__name__, "detail": str(exc)}
        except (KeyError, TypeError) as exc:
            code, body = 400, {"error": "ValidationError", "detail": f"missing field {exc}"}
        self._send(code, body)

    def do_GET(self):
        def handle():
            if self.path.rstrip("/") == "/stats":
                return 200, self.coordinator.stats()
            return 404, {"error": "NotFound", "detail": self.path}
        self._dispatch(handle)

    def do_POST(self):
        def handle():
            path = self.path.rstrip("/")
            body = self._body()
            c = self.coordinator
            if path == "/resources":
                rid, created = c.add_resource(body["kind"], body["payload"])
                return 200, {"id": rid, "created": created}
            if path == "/resources/next":
                res = c.acquire_next(body["kind"], body["worker_id"])
                return 200, {"resource": res.to_wire() if res else None}
            m = _COMPLETE.match(path)
            if m:
                c.complete(m.group(1), body["worker_id"], body.get("result"))
                return 200, {"ok": True}
            return 404, {"error": "NotFound", "detail": self.path}
        self._dispatch(handle)


def make_server(coordinator: Coordinator, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("CoordinatorHandler", (_Handler,), {"coordinator": coordinator})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


class ServerThread:
    """Run a coordinator server on a background thread (tests, in-process pipelines)."""

    def __init__(self, coordinator: Coordinator, host: str = "127.0.0.1", port: int = 0):
        self.server = make_server(coordinator, host, port)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        self.thread.join()


class CoordinatorClient:
    """HTTP client exposing the same calls as an in-process ``Coordinator``."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _call(self, method: str, path: str, body: Optional[dict] = None) -> dict:
        data = json.dumps(body).encode("utf-8") if body is not None else None
        req = urllib.request.Request(self.base_url + path, data=data, method=method,
                                     headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as err:
            try:
                payload = json.loads(err.read().decode("utf-8"))
            except ValueError:
                payload = {"detail": str(err)}
            detail = payload.get("detail", "")
            exc = {400: ValidationError, 404: NotFoundError,
                   409: StaleLeaseError, 422: InvalidStateError}.get(err.code, CorpusCrawlError)
            raise exc(detail) from None

    def add_resource(self, kind, payload: str) -> Tuple[str, bool]:
        out = self._call("POST", "/resources", {"kind": ResourceKind(kind).value, "payload": payload})
        return out["id"], out["created"]

    def acquire_next(self, kind, worker_id: str) -> Optional[Resource]:
        out = self._call("POST", "/resources/next",
                         {"kind": ResourceKind(kind).value, "worker_id": worker_id})
        r = out["resource"]
        if r is None:
            return None
        return Resource(id=r["id"], kind=ResourceKind(r["kind"]), payload=r["payload"],
                        state=ResourceState(r["state"]), result=r.get("result"))

    def complete(self, resource_id: str, worker_id: str, result: Optional[str] = None) -> bool:
        self._call("POST", f"/resources/{resource_id}/complete",
                   {"worker_id": worker_id, "result": result})
        return True

    def stats(self):
        return self._call("GET", "/stats")
