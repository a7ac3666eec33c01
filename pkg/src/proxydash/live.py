"""Live mode: the hub plus a wall-clock session for browsers to steer.

The controller connects to the hub like any client, consumes tracker
pose updates and tabletop viewport changes, ticks the session in near
real time, and publishes interaction events, state deltas, effects and
robot poses back through the hub.  A snapshot_request is answered with
the full render model, which is how a reconnecting UI resynchronizes.
"""

from __future__ import annotations

import asyncio
import functools
import http.server
import threading
from pathlib import Path

from .dashboard import state_to_dict
from .hub import Envelope, Hub
from .session import Session, render_model_to_dict


class LiveController:
    """Bridges one Session onto a hub connection, in wall-clock time."""

    def __init__(self, session: Session, host: str, port: int):
        self.session = session
        self.host = host
        self.port = port
        self._sent_idx = 0
        self._seq = 0

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    async def run(self) -> None:
        from websockets.asyncio.client import connect

        uri = f"ws://{self.host}:{self.port}"
        async with connect(uri) as socket:
            hello = Envelope(t_ms=0, seq=self._next_seq(), role="controller",
                             sender="live", kind="hello", payload={})
            await socket.send(hello.to_json())
            await socket.recv()  # welcome
            recv_task = asyncio.create_task(self._consume(socket))
            try:
                await self._tick_loop(socket)
            finally:
                recv_task.cancel()

    async def _consume(self, socket) -> None:
        async for raw in socket:
            try:
                env = Envelope.from_json(raw)
            except Exception:
                continue
            if env.kind == "snapshot_request":
                await self._send_snapshot(socket)
                continue
            env_now = Envelope(t_ms=self.session.now_ms + 10, seq=env.seq,
                               role=env.role, sender=env.sender,
                               kind=env.kind, payload=env.payload)
            self.session.feed([env_now])

    async def _send_snapshot(self, socket) -> None:
        from .scenario import scenario_to_dict

        vp = self.session.fleet.viewport
        scenario_doc = scenario_to_dict(self.session.scenario)
        scenario_doc["viewport"] = {
            "center": [vp.center_lat, vp.center_lon],
            "zoom_level": vp.zoom_level,
            "rotation": vp.rotation,
        }
        payload = {
            "state": state_to_dict(self.session.state),
            "render": render_model_to_dict(self.session.render_model()),
            "robots": {r.id: list(r.pose) for r in self.session.fleet.robots},
            "scenario": scenario_doc,
        }
        env = Envelope(t_ms=self.session.now_ms, seq=self._next_seq(),
                       role="controller", sender="live", kind="snapshot",
                       payload=payload)
        await socket.send(env.to_json())

    async def _tick_loop(self, socket) -> None:
        dt = self.session.sim_dt
        loop = asyncio.get_running_loop()
        next_at = loop.time()
        while True:
            self.session.tick()
            entries = self.session.trace.entries
            while self._sent_idx < len(entries):
                _, env = entries[self._sent_idx]
                self._sent_idx += 1
                if env.role == "controller":
                    forwarded = Envelope(t_ms=env.t_ms, seq=self._next_seq(),
                                         role=env.role, sender=env.sender,
                                         kind=env.kind, payload=env.payload)
                    await socket.send(forwarded.to_json())
            next_at += dt
            delay = next_at - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_at = loop.time()  # fell behind; drop the debt


def _serve_static(directory: str, port: int) -> threading.Thread:
    handler = functools.partial(http.server.SimpleHTTPRequestHandler,
                                directory=directory)
    httpd = http.server.ThreadingHTTPServer(("127.0.0.1", port), handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    print(f"ui: http://127.0.0.1:{port}/ (serving {directory})")
    return thread


async def serve_forever(args) -> None:
    from .cli import _load_readings_for, _load_scenario_arg

    scenario = _load_scenario_arg(args)
    readings = _load_readings_for(scenario, args.scenario)
    hub = Hub(host=args.host, port=args.port)
    await hub.serve()
    print(f"hub: ws://{args.host}:{hub.bound_port}")

    if args.ui:
        ui_dir = args.ui_dir
        if ui_dir is None:
            candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
            ui_dir = str(candidate)
        if Path(ui_dir).exists():
            _serve_static(ui_dir, args.ui_port)
        else:
            print(f"ui: directory {ui_dir} not found, skipping")

    session = Session(scenario, readings=readings)
    controller = LiveController(session, args.host, hub.bound_port)
    try:
        await controller.run()
    finally:
        await hub.aclose()
