"""Network front end: one port speaking both raw NDJSON-over-TCP and HTTP.

A connection whose first byte opens a JSON object is treated as a headless
protocol stream (one frame per line). Anything else is parsed as HTTP: a
WebSocket upgrade on any path joins the same session protocol (one frame per
text message), and plain GETs serve the static browser client when a UI
directory is configured.

Each connection owns at most one session. Frames are processed strictly in
arrival order and deferred evaluations are delivered inline before the next
frame, which keeps a session's log and outbound sequence deterministic for a
given seed and message sequence.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import random
import struct
import threading
import time
from pathlib import Path

from .config import ServerConfig
from .errors import DecodeError
from .evaluation import EvaluationContext
from .protocol import WireMessage, decode_message, encode_message, error_message
from .session import SessionCore, SessionLogWriter, SyncSessionRunner

WS_MAGIC = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
READ_LIMIT = 4 * 1024 * 1024

CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


def _now_ms() -> int:
    return time.monotonic_ns() // 1_000_000


class FacadeServer:
    def __init__(
        self,
        config: ServerConfig,
        log_dir: str | Path | None = None,
        ui_dir: str | Path | None = None,
    ):
        config.check()
        self.config = config
        self.ctx = EvaluationContext(config)
        self.log_dir = Path(log_dir if log_dir is not None else config.log_dir)
        self.ui_dir = Path(ui_dir).resolve() if ui_dir is not None else None
        self._server: asyncio.AbstractServer | None = None

    # --- lifecycle -----------------------------------------------------------

    async def start(self, host: str = "127.0.0.1", port: int | None = None) -> int:
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self._server = await asyncio.start_server(
            self._handle_connection,
            host,
            self.config.port if port is None else port,
            limit=READ_LIMIT,
        )
        return self._server.sockets[0].getsockname()[1]

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    async def serve_forever(self) -> None:
        assert self._server is not None
        async with self._server:
            await self._server.serve_forever()

    # --- connection dispatch ---------------------------------------------------

    async def _handle_connection(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        try:
            first = await reader.readline()
            if not first:
                return
            if first.lstrip().startswith(b"{"):
                await self._run_tcp_session(first, reader, writer)
            else:
                await self._handle_http(first, reader, writer)
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            try:
                writer.close()
                await writer.wait_closed()
            except (ConnectionError, OSError):
                pass

    # --- NDJSON over TCP ---------------------------------------------------------

    async def _run_tcp_session(self, first_line: bytes, reader, writer) -> None:
        async def recv():
            line = await reader.readline()
            return line if line else None

        async def send(data: bytes):
            writer.write(data)
            await writer.drain()

        await self._session_loop(first_line, recv, send)

    # --- shared session loop ---------------------------------------------------

    async def _session_loop(self, first_frame: bytes | None, recv, send) -> None:
        runner: SyncSessionRunner | None = None
        frame = first_frame
        try:
            while True:
                if frame is None:
                    frame = await recv()
                    if frame is None:
                        return
                try:
                    msg = decode_message(frame)
                except DecodeError as exc:
                    # malformed frame: report and drop the connection
                    await send(encode_message(error_message(None, 0, "decode_error", str(exc))))
                    return
                frame = None
                now = _now_ms()
                if runner is None:
                    if msg.type != "hello":
                        await send(
                            encode_message(
                                error_message(None, 0, "hello_required", f"got {msg.type}")
                            )
                        )
                        return
                    runner = self._new_session(msg)
                    outbound = runner.handle_hello(msg, now)
                else:
                    outbound = runner.handle(msg, now)
                for out in outbound:
                    await send(encode_message(out))
                if runner.core.closed:
                    return
        finally:
            if runner is not None and runner.writer is not None:
                runner.writer.close()

    def _new_session(self, hello: WireMessage) -> SyncSessionRunner:
        body = hello.body
        seed = body.get("seed")
        if seed is None:
            seed = random.SystemRandom().getrandbits(48)
        core = SessionCore(
            self.config,
            self.ctx,
            participant_id=body["participant_id"],
            seed=seed,
            clock=body.get("clock", "real"),
            first_condition=body.get("first_condition"),
        )
        log_writer = SessionLogWriter(self.log_dir / f"{core.session_id}.jsonl")
        return SyncSessionRunner(core, log_writer)

    # --- HTTP: static files and WebSocket upgrade ---------------------------------

    async def _handle_http(self, request_line: bytes, reader, writer) -> None:
        try:
            method, path, _ = request_line.decode("latin-1").split(" ", 2)
        except ValueError:
            writer.write(b"HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n")
            await writer.drain()
            return
        headers: dict[str, str] = {}
        while True:
            line = await reader.readline()
            if line in (b"\r\n", b"\n", b""):
                break
            if b":" in line:
                name, _, value = line.decode("latin-1").partition(":")
                headers[name.strip().lower()] = value.strip()

        if headers.get("upgrade", "").lower() == "websocket":
            await self._run_websocket(headers, reader, writer)
            return
        if method != "GET":
            writer.write(b"HTTP/1.1 405 Method Not Allowed\r\nContent-Length: 0\r\n\r\n")
            await writer.drain()
            return
        await self._serve_static(path, writer)

    async def _serve_static(self, path: str, writer) -> None:
        if self.ui_dir is None:
            writer.write(
                b"HTTP/1.1 404 Not Found\r\nContent-Length: 19\r\n\r\nno UI directory set"
            )
            await writer.drain()
            return
        rel = path.split("?", 1)[0].lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not target.is_relative_to(self.ui_dir) or not target.is_file():
            writer.write(b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\n\r\n")
            await writer.drain()
            return
        data = target.read_bytes()
        ctype = CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        head = (
            f"HTTP/1.1 200 OK\r\nContent-Type: {ctype}\r\n"
            f"Content-Length: {len(data)}\r\nCache-Control: no-cache\r\n\r\n"
        ).encode("latin-1")
        writer.write(head + data)
        await writer.drain()

    async def _run_websocket(self, headers: dict[str, str], reader, writer) -> None:
        key = headers.get("sec-websocket-key")
        if not key:
            writer.write(b"HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n")
            await writer.drain()
            return
        accept = base64.b64encode(
            hashlib.sha1((key + WS_MAGIC).encode("latin-1")).digest()
        ).decode("latin-1")
        writer.write(
            (
                "HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\nConnection: Upgrade\r\n"
                f"Sec-WebSocket-Accept: {accept}\r\n\r\n"
            ).encode("latin-1")
        )
        await writer.drain()

        async def recv():
            while True:
                msg = await _ws_read_message(reader)
                if msg is None:
                    return None
                opcode, payload = msg
                if opcode == 0x1:  # text
                    return payload
                if opcode == 0x9:  # ping -> pong
                    writer.write(_ws_frame(0xA, payload))
                    await writer.drain()
                    continue
                if opcode == 0x8:  # close
                    writer.write(_ws_frame(0x8, b""))
                    await writer.drain()
                    return None
                # binary and anything else is not part of this protocol
                return None

        async def send(data: bytes):
            writer.write(_ws_frame(0x1, data))
            await writer.drain()

        await self._session_loop(None, recv, send)


# --- RFC 6455 framing helpers -----------------------------------------------------


def _ws_frame(opcode: int, payload: bytes) -> bytes:
    head = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([n])
    elif n < 1 << 16:
        head += bytes([126]) + struct.pack(">H", n)
    else:
        head += bytes([127]) + struct.pack(">Q", n)
    return head + payload


async def _ws_read_message(reader) -> tuple[int, bytes] | None:
    """Read one complete (possibly fragmented) message from a client."""
    opcode = None
    buffer = b""
    while True:
        try:
            b1b2 = await reader.readexactly(2)
        except asyncio.IncompleteReadError:
            return None
        fin = bool(b1b2[0] & 0x80)
        frame_op = b1b2[0] & 0x0F
        masked = bool(b1b2[1] & 0x80)
        length = b1b2[1] & 0x7F
        if length == 126:
            length = struct.unpack(">H", await reader.readexactly(2))[0]
        elif length == 127:
            length = struct.unpack(">Q", await reader.readexactly(8))[0]
        if length > READ_LIMIT:
            return None
        mask = await reader.readexactly(4) if masked else b""
        payload = await reader.readexactly(length)
        if masked:
            payload = bytes(c ^ mask[i % 4] for i, c in enumerate(payload))
        if frame_op in (0x8, 0x9, 0xA):  # control frames are never fragmented
            return (frame_op, payload)
        if opcode is None:
            opcode = frame_op
        buffer += payload
        if fin:
            return (opcode, buffer)


class ServerThread:
    """Runs a FacadeServer on a private event loop in a daemon thread; used
    by the agent batch runner and the test suite."""

    def __init__(
        self,
        config: ServerConfig,
        log_dir: str | Path,
        ui_dir: str | Path | None = None,
        host: str = "127.0.0.1",
    ):
        self.server = FacadeServer(config, log_dir=log_dir, ui_dir=ui_dir)
        self.host = host
        self.port: int | None = None
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._started = threading.Event()

    def start(self) -> tuple[str, int]:
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()
        if not self._started.wait(timeout=10):
            raise RuntimeError("server thread failed to start")
        assert self.port is not None
        return self.host, self.port

    def _run(self) -> None:
        loop = asyncio.new_event_loop()
        self._loop = loop
        asyncio.set_event_loop(loop)
        self.port = loop.run_until_complete(self.server.start(self.host, port=0))
        self._started.set()
        try:
            loop.run_forever()
        finally:
            loop.run_until_complete(self.server.stop())
            loop.close()

    def stop(self) -> None:
        if self._loop is not None:
            self._loop.call_soon_threadsafe(self._loop.stop)
        if self._thread is not None:
            self._thread.join(timeout=10)
