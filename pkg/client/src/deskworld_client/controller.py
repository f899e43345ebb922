"""Blocking lock-step controller: one request in, one response out."""

from __future__ import annotations

import json
import random
import socket
import struct
import time
from pathlib import Path

DEFAULT_PORT = 1071


class ConnectionFailed(Exception):
    pass


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def encode_frame(payload: bytes) -> bytes:
    return struct.pack("<I", len(payload)) + payload


def recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionFailed("server closed the connection")
        buf += chunk
    return buf


class Controller:
    """Sends command lists to the server and returns its output data.

    The response is always a list whose final element is the frame counter;
    any output blobs the commands requested come before it.  Not safe for
    concurrent ``communicate`` calls: the protocol is strictly one request,
    one response.
    """

    def __init__(self, port: int = DEFAULT_PORT, host: str = "127.0.0.1",
                 connect_timeout: float = 10.0,
                 record_to: str | Path | None = None):
        self._record_path = Path(record_to) if record_to else None
        if self._record_path:
            self._record_path.write_text("")
        deadline = time.monotonic() + connect_timeout
        last_error: Exception | None = None
        while True:
            try:
                self.sock = socket.create_connection((host, port), timeout=30.0)
                break
            except OSError as exc:
                last_error = exc
                if time.monotonic() >= deadline:
                    raise ConnectionFailed(
                        f"cannot reach server at {host}:{port}: {exc}"
                    ) from last_error
                time.sleep(0.1)

    def communicate(self, commands) -> list:
        """Accepts one command dict or a list of them; returns the response."""
        if isinstance(commands, dict):
            commands = [commands]
        payload = canonical_json(commands)
        if self._record_path:
            with self._record_path.open("a") as fh:
                fh.write(payload.decode() + "\n")
        self.sock.sendall(encode_frame(payload))
        (n,) = struct.unpack("<I", recv_exact(self.sock, 4))
        resp = json.loads(recv_exact(self.sock, n))
        if not isinstance(resp, list) or not resp or not isinstance(resp[-1], int):
            raise ConnectionFailed(f"malformed response: {resp!r}")
        return resp

    def start(self, scene_name: str = "ProcGenScene") -> list:
        return self.communicate({"$type": "load_scene", "scene_name": scene_name})

    @staticmethod
    def get_unique_id() -> int:
        return random.randint(1, 2 ** 30)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass

    def __enter__(self) -> "Controller":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
