"""Role-based WebSocket message hub with full-session record/replay.

Every frame is one UTF-8 JSON envelope.  Clients introduce themselves
with a hello declaring their role; afterwards the hub fans each message
out to the consumer roles of its kind, preserving per-sender order (the
hub runs a single event loop, so receipt order is delivery order).  A
recorder role receives everything.  Malformed frames earn a NACK but
keep the connection; a second connection for a singleton role is
refused.  A dashboard or tabletop client going away never stalls the
rest: sends to dead peers are dropped.
"""

from __future__ import annotations

import asyncio
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1

ROLES = ("tracker", "robot", "dashboard", "tabletop", "recorder", "controller")
SINGLETON_ROLES = frozenset({"dashboard", "tabletop", "controller"})

KINDS_V1 = frozenset({
    "hello", "pose_update", "interaction_event", "wheel_command",
    "viewport_change", "state_delta", "effects", "snapshot_request",
    "snapshot",
})

# kind -> consumer roles (recorder taps everything separately)
ROUTES: dict[str, frozenset] = {
    "pose_update": frozenset({"controller", "tabletop"}),
    "interaction_event": frozenset({"controller"}),
    "wheel_command": frozenset({"robot"}),
    "viewport_change": frozenset({"controller"}),
    "state_delta": frozenset({"dashboard", "tabletop"}),
    "effects": frozenset({"dashboard", "tabletop"}),
    "snapshot_request": frozenset({"controller"}),
    "snapshot": frozenset({"dashboard", "tabletop"}),
}


class EnvelopeError(ValueError):
    pass


@dataclass(frozen=True)
class Envelope:
    """Versioned wire message. seq is strictly increasing per (role, sender).

    sid is reserved for multi-table federation and stays empty in v1.
    """

    t_ms: int
    seq: int
    role: str
    sender: str
    kind: str
    payload: dict
    v: int = PROTOCOL_VERSION
    sid: str = ""

    def to_json(self) -> str:
        return json.dumps({"v": self.v, "sid": self.sid, "t_ms": self.t_ms,
                           "seq": self.seq, "role": self.role,
                           "sender": self.sender, "kind": self.kind,
                           "payload": self.payload},
                          separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "Envelope":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise EnvelopeError(f"not JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise EnvelopeError("envelope must be an object")
        try:
            env = Envelope(v=int(doc["v"]), t_ms=int(doc["t_ms"]),
                           seq=int(doc["seq"]), role=str(doc["role"]),
                           sender=str(doc["sender"]), kind=str(doc["kind"]),
                           payload=doc.get("payload") or {},
                           sid=str(doc.get("sid", "")))
        except (KeyError, TypeError, ValueError) as exc:
            raise EnvelopeError(f"bad envelope fields: {exc}") from None
        if env.v != PROTOCOL_VERSION:
            raise EnvelopeError(f"unsupported protocol version {env.v}")
        if env.role not in ROLES:
            raise EnvelopeError(f"unknown role {env.role!r}")
        if env.kind not in KINDS_V1:
            raise EnvelopeError(f"unknown kind {env.kind!r} for v1")
        return env


# -- trace files -------------------------------------------------------------

@dataclass
class Trace:
    scenario_id: str
    config_hash: str
    started_at: str = ""
    entries: list[tuple[int, Envelope]] = field(default_factory=list)

    def append(self, t_ms: int, env: Envelope) -> None:
        if self.entries and t_ms < self.entries[-1][0]:
            raise EnvelopeError("trace entries must be time ordered")
        self.entries.append((t_ms, env))


def write_trace(trace: Trace, sink: IO[str]) -> None:
    sink.write(json.dumps({"trace_header": 1, "scenario": trace.scenario_id,
                           "config_hash": trace.config_hash,
                           "started_at": trace.started_at}) + "\n")
    for t_ms, env in trace.entries:
        sink.write(json.dumps({"t_ms": t_ms, "envelope": json.loads(env.to_json())})
                   + "\n")


def read_trace(source: IO[str]) -> Trace:
    header_line = source.readline()
    if not header_line.strip():
        raise EnvelopeError("empty trace file")
    header = json.loads(header_line)
    if "trace_header" not in header:
        raise EnvelopeError("missing trace header line")
    trace = Trace(scenario_id=header.get("scenario", ""),
                  config_hash=header.get("config_hash", ""),
                  started_at=header.get("started_at", ""))
    for line in source:
        line = line.strip()
        if not line:
            continue
        doc = json.loads(line)
        env = Envelope.from_json(json.dumps(doc["envelope"]))
        trace.append(doc["t_ms"], env)
    return trace


def load_trace(path: str | Path) -> Trace:
    with open(path, encoding="utf-8") as f:
        return read_trace(f)


def save_trace(trace: Trace, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        write_trace(trace, f)


# -- the hub ----------------------------------------------------------------

class HubError(RuntimeError):
    pass


@dataclass
class _Client:
    role: str
    sender: str
    socket: object


class Hub:
    """Live WebSocket hub.  serve() binds, aclose() tears down."""

    def __init__(self, host: str = "127.0.0.1", port: int = 8765,
                 recording: Trace | None = None):
        self.host = host
        self.port = port
        self.recording = recording
        self.clients: list[_Client] = []
        self._server = None
        self._last_seq: dict[tuple[str, str], int] = {}
        self._t0: float | None = None

    async def serve(self):
        import websockets.asyncio.server as ws_server

        self._server = await ws_server.serve(self._handle, self.host, self.port)
        return self

    @property
    def bound_port(self) -> int:
        sock = next(iter(self._server.sockets))
        return sock.getsockname()[1]

    async def aclose(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    def _singleton_taken(self, role: str) -> bool:
        return role in SINGLETON_ROLES and any(c.role == role for c in self.clients)

    async def _handle(self, socket) -> None:
        client: _Client | None = None
        try:
            hello_raw = await socket.recv()
            try:
                hello = Envelope.from_json(hello_raw)
                if hello.kind != "hello":
                    raise EnvelopeError("first frame must be a hello")
            except EnvelopeError as exc:
                await socket.send(json.dumps({"kind": "nack", "reason": str(exc)}))
                return
            if self._singleton_taken(hello.role):
                await socket.send(json.dumps(
                    {"kind": "refused",
                     "reason": f"role {hello.role} already connected"}))
                return
            client = _Client(hello.role, hello.sender, socket)
            self.clients.append(client)
            await socket.send(json.dumps({"kind": "welcome", "role": hello.role}))
            self._record(hello)

            async for raw in socket:
                try:
                    env = Envelope.from_json(raw)
                    self._check_seq(env)
                except EnvelopeError as exc:
                    await socket.send(json.dumps({"kind": "nack",
                                                  "reason": str(exc)}))
                    continue
                self._record(env)
                await self._fan_out(env, client)
        finally:
            if client is not None and client in self.clients:
                self.clients.remove(client)

    def _check_seq(self, env: Envelope) -> None:
        key = (env.role, env.sender)
        last = self._last_seq.get(key)
        if last is not None and env.seq <= last:
            raise EnvelopeError(
                f"seq {env.seq} does not advance {key} (last {last})")
        self._last_seq[key] = env.seq

    def _record(self, env: Envelope) -> None:
        # The hub is the time authority: entries are ordered by receive
        # time (sender timestamps stay inside the envelope).
        if self.recording is not None:
            if self._t0 is None:
                self._t0 = asyncio.get_running_loop().time()
            t_rec = int((asyncio.get_running_loop().time() - self._t0) * 1000)
            self.recording.append(t_rec, env)

    async def _fan_out(self, env: Envelope, origin: _Client) -> None:
        targets = ROUTES.get(env.kind, frozenset())
        text = env.to_json()
        for client in list(self.clients):
            if client is origin:
                continue
            if client.role in targets or client.role == "recorder":
                try:
                    await client.socket.send(text)
                except Exception:
                    # Crash isolation: a dead consumer never stalls routing.
                    if client in self.clients:
                        self.clients.remove(client)


async def replay_into(trace: Trace, send, speed: float = 1.0,
                      realtime: bool = False) -> int:
    """Feed a trace's envelopes to ``send`` (an async callable), optionally
    pacing wall time at 1/speed of the recorded gaps.  Returns count."""
    if speed <= 0:
        raise HubError("replay speed must be > 0")
    prev_t = None
    n = 0
    for t_ms, env in trace.entries:
        if realtime and prev_t is not None and t_ms > prev_t:
            await asyncio.sleep((t_ms - prev_t) / 1000.0 / speed)
        prev_t = t_ms
        await send(env)
        n += 1
    return n
