"""Live session host: native TCP + WebSocket front ends over one writer loop.

All state mutation happens in a single writer task fed by per-connection
reader tasks through an ordered queue, so the host is serialized exactly
like the pure host_ingest contract. Accepted events stream to a JSON-lines
log that gains a digest footer on shutdown.
"""

from __future__ import annotations

import asyncio
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from .protocol import (
    Bye,
    Envelope,
    Hello,
    Ping,
    Pong,
    Rejection,
    decode,
    deframe,
    encode,
    envelope_from_json,
    envelope_to_json,
    frame,
    host_ingest,
    host_join,
    HostState,
    Welcome,
)
from .state import events as ev

log = logging.getLogger("tutorlink.server")


class ConfigError(ValueError):
    pass


@dataclass
class ServerConfig:
    scene_mesh: Optional[str] = None
    scene_metadata: Optional[str] = None
    port: int = 7740
    ws_port: int = 7741
    send_rate: float = 30.0
    log_path: Optional[str] = None
    nav: dict = field(default_factory=dict)


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> ServerConfig:
    """flag > file > default."""
    data = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a JSON object")
    scene = data.get("scene", {})
    cfg = ServerConfig(
        scene_mesh=scene.get("mesh"),
        scene_metadata=scene.get("metadata"),
        port=int(data.get("port", 7740)),
        ws_port=int(data.get("ws_port", 7741)),
        send_rate=float(data.get("send_rate", 30.0)),
        log_path=data.get("log"),
        nav=data.get("nav", {}),
    )
    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, key, value)
    if cfg.send_rate <= 0:
        raise ConfigError("send_rate must be positive")
    for p in (cfg.scene_mesh, cfg.scene_metadata):
        if p is not None and not Path(p).exists():
            raise ConfigError(f"scene file not found: {p}")
    return cfg


class _Peer:
    def __init__(self, peer_id: int, sender: str, send):
        self.peer_id = peer_id
        self.sender = sender
        self.send = send  # async fn(bytes_or_str_payload: Envelope)


class SessionServer:
    def __init__(self, config: ServerConfig):
        self.config = config
        self.host = HostState()
        self.peers: Dict[int, _Peer] = {}
        self.inbox: asyncio.Queue = asyncio.Queue()
        self._next_peer_id = 1
        self._log_fh = None
        self._servers = []
        self._writer_task = None
        self._outbound = []

    # --- lifecycle -----------------------------------------------------------

    async def start(self):
        if self.config.log_path:
            self._log_fh = open(self.config.log_path, "w", encoding="utf-8")
        tcp = await asyncio.start_server(self._handle_native, host="127.0.0.1", port=self.config.port)
        self._servers.append(tcp)
        self.bound_port = tcp.sockets[0].getsockname()[1]
        self.bound_ws_port = None
        try:
            import websockets

            ws = await websockets.serve(
                self._handle_ws,
                host="127.0.0.1",
                port=self.config.ws_port,
                process_request=self._process_request,
            )
            self._servers.append(ws)
            self.bound_ws_port = ws.sockets[0].getsockname()[1]
        except ImportError:  # pragma: no cover - websockets is a hard dep
            log.warning("websockets unavailable; browser transport disabled")
        self._writer_task = asyncio.create_task(self._writer_loop())
        log.info("serving on tcp:%d ws:%d", self.config.port, self.config.ws_port)

    async def close(self):
        for s in self._servers:
            s.close()
            try:
                await s.wait_closed()
            except Exception:
                pass
        if self._writer_task:
            self._writer_task.cancel()
            try:
                await self._writer_task
            except asyncio.CancelledError:
                pass
        if self._log_fh:
            digest = self.host.digest()
            self._log_fh.write(json.dumps({"footer": True, "digest": digest}) + "\n")
            self._log_fh.close()
            self._log_fh = None
            log.info("session log closed, digest %s", digest)

    # --- single writer loop --------------------------------------------------

    async def _writer_loop(self):
        while True:
            peer_id, envelope = await self.inbox.get()
            peer = self.peers.get(peer_id)
            if peer is None:
                continue
            payload = envelope.payload
            if isinstance(payload, Ping):
                await self._safe_send(peer, Envelope("control", 0, "teacher_host", Pong(payload.nonce)))
                continue
            if isinstance(payload, Bye):
                continue
            if not isinstance(payload, ev.Event):
                log.debug("ignoring non-event payload %r from %s", payload, peer.sender)
                continue
            self._ingest_and_fanout(envelope, origin_peer=peer)
            await self._flush_outbound()

    def _ingest_and_fanout(self, envelope: Envelope, origin_peer: Optional[_Peer]):
        self.host, broadcasts, rejections = host_ingest(self.host, envelope)
        for b in broadcasts:
            if self._log_fh:
                self._log_fh.write(
                    json.dumps(envelope_to_json(b.envelope), sort_keys=True, separators=(",", ":")) + "\n"
                )
                self._log_fh.flush()
            for peer in list(self.peers.values()):
                if b.exclude_originator and origin_peer is not None and peer.peer_id == origin_peer.peer_id:
                    continue
                self._outbound.append((peer, b.envelope))
        if origin_peer is not None:
            for r in rejections:
                self._outbound.append((origin_peer, Envelope("control", 0, "teacher_host", r)))

    async def _flush_outbound(self):
        for peer, env in self._outbound:
            await self._safe_send(peer, env)
        self._outbound.clear()

    async def _safe_send(self, peer: _Peer, envelope: Envelope):
        try:
            await peer.send(envelope)
        except Exception:
            self.peers.pop(peer.peer_id, None)

    # --- connection handling -------------------------------------------------

    def _register(self, sender: str, send) -> _Peer:
        peer = _Peer(self._next_peer_id, sender, send)
        self._next_peer_id += 1
        self.peers[peer.peer_id] = peer
        return peer

    def _unregister(self, peer: _Peer):
        self.peers.pop(peer.peer_id, None)
        # a vanished sketching peer must not leave strokes open forever
        if peer.sender in ("teacher_host", "console"):
            self._close_open_sketches()

    def _close_open_sketches(self):
        open_ids = [sid for sid, sk in self.host.session.sketches.items() if not sk.closed]
        for sid in open_ids:
            seq = self.host.session.applied_seq.get(("teacher_host", "annotation"), -1) + 1
            env = Envelope("annotation", seq, "teacher_host", ev.SketchEnd(sketch_id=sid))
            self._ingest_and_fanout(env, origin_peer=None)
        if open_ids:
            asyncio.ensure_future(self._flush_outbound())

    async def _handshake(self, envelope: Envelope):
        """Validate a Hello; returns (sender, reply envelope) or (None, bye)."""
        if not isinstance(envelope.payload, Hello):
            return None, Envelope("control", 0, "teacher_host", Bye("expected_hello"))
        result = host_join(self.host, envelope.payload)
        if isinstance(result, Bye):
            return None, Envelope("control", 0, "teacher_host", result)
        sender = envelope.payload.role
        if sender not in ("student_client", "console", "teacher_host"):
            return None, Envelope("control", 0, "teacher_host", Bye("unknown_role"))
        return sender, Envelope("control", 0, "teacher_host", result)

    async def _handle_native(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        buf = b""
        peer = None

        async def send(envelope: Envelope):
            writer.write(frame(encode(envelope)))
            await writer.drain()

        try:
            while True:
                chunk = await reader.read(65536)
                if not chunk:
                    break
                buf += chunk
                frames, buf = deframe(buf)
                for data in frames:
                    envelope = decode(data)
                    if peer is None:
                        sender, reply = await self._handshake(envelope)
                        await send(reply)
                        if sender is None:
                            return
                        peer = self._register(sender, send)
                        continue
                    await self.inbox.put((peer.peer_id, envelope))
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            if peer is not None:
                self._unregister(peer)
            writer.close()
            try:
                await writer.wait_closed()
            except Exception:
                pass

    # --- websocket + static scene assets -------------------------------------

    def _scene_assets(self) -> Dict[str, Path]:
        assets = {}
        if self.config.scene_mesh:
            p = Path(self.config.scene_mesh)
            assets["mesh.obj"] = p
            assets[p.name] = p
        if self.config.scene_metadata:
            p = Path(self.config.scene_metadata)
            assets["metadata.json"] = p
            assets[p.name] = p
        return assets

    def _process_request(self, connection, request):
        path = request.path.split("?", 1)[0]
        if not path.startswith("/scene"):
            return None  # proceed with the websocket handshake
        name = path[len("/scene") :].lstrip("/")
        asset = self._scene_assets().get(name)
        if name == "" or name == "index.json":
            listing = json.dumps(sorted(set(self._scene_assets())))
            return connection.respond(200, listing)
        if asset is None or not asset.exists():
            return connection.respond(404, "not found\n")
        return connection.respond(200, asset.read_text(encoding="utf-8"))

    async def _handle_ws(self, connection):
        peer = None

        async def send(envelope: Envelope):
            await connection.send(json.dumps(envelope_to_json(envelope), sort_keys=True, separators=(",", ":")))

        try:
            async for message in connection:
                if isinstance(message, bytes):
                    message = message.decode()
                envelope = envelope_from_json(json.loads(message))
                if peer is None:
                    sender, reply = await self._handshake(envelope)
                    await send(reply)
                    if sender is None:
                        return
                    peer = self._register(sender, send)
                    continue
                await self.inbox.put((peer.peer_id, envelope))
        except Exception as exc:
            log.debug("ws connection ended: %r", exc)
        finally:
            if peer is not None:
                self._unregister(peer)


async def run_server(config: ServerConfig, stop: asyncio.Event) -> str:
    """Serve until the stop event fires; returns the final digest."""
    server = SessionServer(config)
    await server.start()
    try:
        await stop.wait()
    finally:
        digest = server.host.digest()
        await server.close()
    return digest
