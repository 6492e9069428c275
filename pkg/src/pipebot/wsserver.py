"""Minimal WebSocket (RFC 6455) server layer on stdlib sockets.

Text frames, ping/pong, and close only; no extensions, no compression,
server side only. Exists because the gateway must speak to browsers and
this deployment has no WebSocket library available; the frame codec is
kept as small pure functions so it can be unit tested directly.
"""

from __future__ import annotations

import base64
import hashlib
import socket
import struct
import threading
from dataclasses import dataclass
from typing import Callable

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class HandshakeError(ValueError):
    pass


class ProtocolError(ValueError):
    pass


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def parse_http_request(raw: bytes) -> dict[str, str]:
    """Headers of an HTTP/1.1 upgrade request, keys lowercased."""
    try:
        text = raw.decode("latin-1")
    except UnicodeDecodeError as exc:
        raise HandshakeError(f"undecodable request: {exc}") from None
    lines = text.split("\r\n")
    if not lines or not lines[0].startswith("GET "):
        raise HandshakeError("not an HTTP GET request")
    headers = {}
    for line in lines[1:]:
        if not line:
            break
        name, sep, value = line.partition(":")
        if not sep:
            raise HandshakeError(f"malformed header line {line!r}")
        headers[name.strip().lower()] = value.strip()
    return headers


def handshake_response(headers: dict[str, str]) -> bytes:
    if headers.get("upgrade", "").lower() != "websocket":
        raise HandshakeError("missing Upgrade: websocket")
    key = headers.get("sec-websocket-key")
    if not key:
        raise HandshakeError("missing Sec-WebSocket-Key")
    return (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(key)}\r\n"
        "\r\n"
    ).encode("ascii")


def encode_frame(payload: bytes, opcode: int = OP_TEXT, fin: bool = True) -> bytes:
    """Server-to-client frame (never masked)."""
    head = bytes([(0x80 if fin else 0x00) | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([n])
    elif n < 1 << 16:
        head += bytes([126]) + struct.pack(">H", n)
    else:
        head += bytes([127]) + struct.pack(">Q", n)
    return head + payload


def encode_text(message: str) -> bytes:
    return encode_frame(message.encode("utf-8"), OP_TEXT)


def encode_close(code: int = 1000) -> bytes:
    return encode_frame(struct.pack(">H", code), OP_CLOSE)


@dataclass
class Frame:
    fin: bool
    opcode: int
    payload: bytes


def decode_frame(buf: bytes) -> tuple[Frame, int] | None:
    """Parse one frame from buf; None if incomplete.

    Returns (frame, bytes consumed). Client frames must be masked.
    """
    if len(buf) < 2:
        return None
    b0, b1 = buf[0], buf[1]
    fin = bool(b0 & 0x80)
    if b0 & 0x70:
        raise ProtocolError("reserved bits set (no extensions negotiated)")
    opcode = b0 & 0x0F
    masked = bool(b1 & 0x80)
    length = b1 & 0x7F
    pos = 2
    if length == 126:
        if len(buf) < pos + 2:
            return None
        length = struct.unpack(">H", buf[pos : pos + 2])[0]
        pos += 2
    elif length == 127:
        if len(buf) < pos + 8:
            return None
        length = struct.unpack(">Q", buf[pos : pos + 8])[0]
        pos += 8
    if not masked:
        raise ProtocolError("client frames must be masked")
    if len(buf) < pos + 4 + length:
        return None
    mask = buf[pos : pos + 4]
    pos += 4
    data = bytes(b ^ mask[i % 4] for i, b in enumerate(buf[pos : pos + length]))
    return Frame(fin, opcode, data), pos + length


def decode_server_frame(buf: bytes) -> tuple[Frame, int] | None:
    """Parse one unmasked server-to-client frame (client-side codec)."""
    if len(buf) < 2:
        return None
    b0, b1 = buf[0], buf[1]
    if b1 & 0x80:
        raise ProtocolError("server frames must not be masked")
    length = b1 & 0x7F
    pos = 2
    if length == 126:
        if len(buf) < pos + 2:
            return None
        length = struct.unpack(">H", buf[pos : pos + 2])[0]
        pos += 2
    elif length == 127:
        if len(buf) < pos + 8:
            return None
        length = struct.unpack(">Q", buf[pos : pos + 8])[0]
        pos += 8
    if len(buf) < pos + length:
        return None
    return Frame(bool(b0 & 0x80), b0 & 0x0F, buf[pos : pos + length]), pos + length


def mask_client_frame(payload: bytes, opcode: int = OP_TEXT, mask: bytes = b"\x11\x22\x33\x44") -> bytes:
    """Build a masked client-to-server frame (used by tests)."""
    head = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([0x80 | n])
    elif n < 1 << 16:
        head += bytes([0x80 | 126]) + struct.pack(">H", n)
    else:
        head += bytes([0x80 | 127]) + struct.pack(">Q", n)
    masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return head + mask + masked


class WsConnection:
    """One upgraded client socket; send is thread-safe."""

    def __init__(self, sock: socket.socket, addr) -> None:
        self.sock = sock
        self.addr = addr
        self.open = True
        self._send_lock = threading.Lock()
        self._buf = b""
        self._fragments: list[bytes] = []

    def send_text(self, message: str) -> bool:
        if not self.open:
            return False
        try:
            with self._send_lock:
                self.sock.sendall(encode_text(message))
            return True
        except OSError:
            self.open = False
            return False

    def _send_raw(self, data: bytes) -> None:
        try:
            with self._send_lock:
                self.sock.sendall(data)
        except OSError:
            self.open = False

    def recv_text(self) -> str | None:
        """Next text message, or None once the connection is closed."""
        while self.open:
            try:
                parsed = decode_frame(self._buf)
            except ProtocolError:
                self.close(1002)
                return None
            if parsed is not None:
                frame, used = parsed
                self._buf = self._buf[used:]
                if frame.opcode == OP_PING:
                    self._send_raw(encode_frame(frame.payload, OP_PONG))
                    continue
                if frame.opcode == OP_PONG:
                    continue
                if frame.opcode == OP_CLOSE:
                    self._send_raw(encode_close())
                    self.open = False
                    return None
                if frame.opcode in (OP_TEXT, OP_BINARY, OP_CONT):
                    self._fragments.append(frame.payload)
                    if not frame.fin:
                        continue
                    data = b"".join(self._fragments)
                    self._fragments = []
                    try:
                        return data.decode("utf-8")
                    except UnicodeDecodeError:
                        self.close(1007)
                        return None
                self.close(1002)  # unknown opcode
                return None
            try:
                chunk = self.sock.recv(65536)
            except OSError:
                self.open = False
                return None
            if not chunk:
                self.open = False
                return None
            self._buf += chunk
        return None

    def close(self, code: int = 1000) -> None:
        if self.open:
            self._send_raw(encode_close(code))
        self.open = False
        try:
            self.sock.close()
        except OSError:
            pass


class WsServer:
    """Accept loop spawning one thread per client."""

    def __init__(
        self,
        host: str,
        port: int,
        on_client: Callable[[WsConnection], None],
    ) -> None:
        self.on_client = on_client
        self._listener = socket.create_server((host, port))
        self.port = self._listener.getsockname()[1]
        self._stop = threading.Event()
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._clients: list[WsConnection] = []
        self._clients_lock = threading.Lock()

    def start(self) -> None:
        self._accept_thread.start()

    def _accept_loop(self) -> None:
        self._listener.settimeout(0.2)
        while not self._stop.is_set():
            try:
                sock, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            threading.Thread(
                target=self._handle_client, args=(sock, addr), daemon=True
            ).start()

    def _handle_client(self, sock: socket.socket, addr) -> None:
        try:
            request = b""
            sock.settimeout(5.0)
            while b"\r\n\r\n" not in request:
                chunk = sock.recv(4096)
                if not chunk:
                    sock.close()
                    return
                request += chunk
                if len(request) > 65536:
                    raise HandshakeError("oversized handshake request")
            head, _, rest = request.partition(b"\r\n\r\n")
            response = handshake_response(parse_http_request(head))
        except (HandshakeError, OSError):
            try:
                sock.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
                sock.close()
            except OSError:
                pass
            return
        sock.sendall(response)
        sock.settimeout(None)
        conn = WsConnection(sock, addr)
        conn._buf = rest
        with self._clients_lock:
            self._clients.append(conn)
        try:
            self.on_client(conn)
        finally:
            conn.close()
            with self._clients_lock:
                if conn in self._clients:
                    self._clients.remove(conn)

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        with self._clients_lock:
            clients = list(self._clients)
        for c in clients:
            c.close()
