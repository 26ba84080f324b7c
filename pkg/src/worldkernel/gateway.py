"""JSON-over-HTTP gateway and role-scoped tool manifests.

Endpoints (HTTP/1.1, JSON bodies, UTF-8):

    GET  /snapshot?agent=ID   role-filtered view of the current state
    GET  /rules?agent=ID      knowledge view the agent's role may see
    GET  /manifest?role=NAME  tool manifest for the role
    POST /act                 {"agent": ..., "tool": ..., "args": {...}}

Every response carries the current world version.  The gateway adds no
semantics of its own: each error class observable over HTTP is exactly
one kernel or mediation error, mapped to a status code here and named
in the payload as {"error": {"class": ..., "detail": ...}}.  Unknown
agents and roles are 404, authorization failures 403, norm rejections
(guard, constraint, structural) 409 with the state untouched, and
malformed requests or ill-typed arguments 400.  Writes serialize
through the kernel's single-writer lock, so concurrent clients observe
a linearizable world.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from . import agents as agents_mod
from .agents import Role
from .errors import UnknownRole, WorldError
from .kernel import WorldKernel
from .schema import Schema

logger = logging.getLogger(__name__)

STATUS_BY_ERROR = {
    "Unauthorized": 403,
    "GuardViolation": 409,
    "ConstraintViolation": 409,
    "StateTypeError": 409,
    "ArgTypeError": 400,
    "EvalError": 400,
    "UnknownAction": 404,
    "UnknownAgent": 404,
    "UnknownRole": 404,
}


def export_tool_manifest(schema: Schema, role: Role) -> dict:
    """Self-describing manifest of the role's authorized tools.

    One entry per authorized action, ordered by name, with the declared
    parameter list and the guard's source text.
    """
    tools = []
    for name in sorted(role.tools):
        decl = schema.actions.get(name)
        if decl is None:
            continue  # a role may not authorize undeclared actions; guarded in validation
        tools.append(
            {
                "name": decl.name,
                "params": [{"name": p.name, "type": p.domain.render()} for p in decl.params],
                "guardText": decl.guard_text,
            }
        )
    return {"world": schema.name, "role": role.name, "tools": tools}


class _Handler(BaseHTTPRequestHandler):
    server_version = "worldkernel-gateway/0.1"
    protocol_version = "HTTP/1.1"

    @property
    def kernel(self) -> WorldKernel:
        return self.server.kernel  # type: ignore[attr-defined]

    def log_message(self, format: str, *args) -> None:  # route through logging, not stderr
        logger.debug("%s %s", self.address_string(), format % args)

    # -- plumbing ---------------------------------------------------------------

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error(self, exc: WorldError) -> None:
        cls = type(exc).__name__
        status = STATUS_BY_ERROR.get(cls, 400)
        self._send(status, {
            "version": self.kernel.version,
            "error": {"class": cls, "detail": str(exc)},
        })

    def _bad_request(self, detail: str) -> None:
        self._send(400, {
            "version": self.kernel.version,
            "error": {"class": "BadRequest", "detail": detail},
        })

    def _query_param(self, query: dict, name: str) -> str | None:
        values = query.get(name)
        if not values or not values[0]:
            self._bad_request(f"missing query parameter {name!r}")
            return None
        return values[0]

    # -- endpoints ----------------------------------------------------------------

    def do_GET(self) -> None:
        url = urlparse(self.path)
        query = parse_qs(url.query)
        try:
            if url.path == "/snapshot":
                agent = self._query_param(query, "agent")
                if agent is None:
                    return
                snapshot = agents_mod.perceive(self.kernel, agent)
                self._send(200, snapshot.to_json_dict())
            elif url.path == "/rules":
                agent = self._query_param(query, "agent")
                if agent is None:
                    return
                entries = agents_mod.query_knowledge(self.kernel, agent)
                self._send(200, {
                    "version": self.kernel.version,
                    "rules": [
                        {
                            "premise": self.kernel.terminology.names_of(e.rule.premise),
                            "conclusion": self.kernel.terminology.features[e.rule.conclusion].name,
                            "p": e.rule.p,
                            "countPremise": e.rule.count_premise,
                            "countBoth": e.rule.count_both,
                        }
                        for e in entries
                    ],
                    "rendered": [e.text for e in entries],
                })
            elif url.path == "/manifest":
                role_name = self._query_param(query, "role")
                if role_name is None:
                    return
                role = self.kernel.roles.get(role_name)
                if role is None:
                    raise UnknownRole(role_name)
                manifest = export_tool_manifest(self.kernel.schema, role)
                self._send(200, {"version": self.kernel.version, **manifest})
            else:
                self._send(404, {
                    "version": self.kernel.version,
                    "error": {"class": "NotFound", "detail": f"no endpoint {url.path}"},
                })
        except WorldError as exc:
            self._send_error(exc)

    def do_POST(self) -> None:
        url = urlparse(self.path)
        if url.path != "/act":
            self._send(404, {
                "version": self.kernel.version,
                "error": {"class": "NotFound", "detail": f"no endpoint {url.path}"},
            })
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length).decode("utf-8")) if length else None
        except (ValueError, UnicodeDecodeError):
            self._bad_request("body is not valid JSON")
            return
        if (
            not isinstance(body, dict)
            or not {"agent", "tool"} <= set(body) <= {"agent", "tool", "args"}
            or not isinstance(body.get("args", {}), dict)
        ):
            self._bad_request('body must be {"agent": ..., "tool": ..., "args"?: {...}}')
            return
        try:
            result = agents_mod.act(self.kernel, body["agent"], body["tool"], body.get("args", {}))
        except WorldError as exc:
            self._send_error(exc)
            return
        if result.committed:
            self._send(200, {"committed": True, "version": result.version})
        else:
            assert result.error is not None
            cls = result.error_class or "WorldError"
            self._send(STATUS_BY_ERROR.get(cls, 400), {
                "committed": False,
                "version": result.version,
                "error": {"class": cls, "detail": str(result.error)},
            })


@dataclass
class GatewayHandle:
    server: ThreadingHTTPServer
    thread: threading.Thread

    @property
    def host(self) -> str:
        return self.server.server_address[0]

    @property
    def port(self) -> int:
        return self.server.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def shutdown(self) -> None:
        self.server.shutdown()
        self.thread.join()
        self.server.server_close()

    def wait(self) -> None:
        self.thread.join()


def serve(kernel: WorldKernel, bind_address: str = "127.0.0.1:0") -> GatewayHandle:
    """Start the gateway on ``host:port`` (port 0 picks a free one); returns a handle."""
    host, _, port_text = bind_address.partition(":")
    server = ThreadingHTTPServer((host or "127.0.0.1", int(port_text or "0")), _Handler)
    server.kernel = kernel  # type: ignore[attr-defined]
    server.daemon_threads = True
    thread = threading.Thread(
        target=lambda: server.serve_forever(poll_interval=0.05),
        name="worldkernel-gateway",
        daemon=True,
    )
    thread.start()
    logger.info("gateway listening on %s:%d", *server.server_address)
    return GatewayHandle(server, thread)
