"""Wire framing and (de)serialization for the lock-step session.

Frame grammar, bit-exact:

    frame    := u32le_length ++ utf8_json
    request  := json array of command objects, each with a "$type" key
    response := json array; last element is the unsigned frame counter,
                preceding elements are objects {"$type_id": <4-char tag>, ...}

JSON is emitted canonically (sorted keys, no whitespace) so the same
response always serializes to identical bytes.
"""

from __future__ import annotations

import json
import socket
import struct
from dataclasses import dataclass, field

from .errors import MalformedFrame, OversizePayload, ProtocolError

MAX_PAYLOAD = 2 ** 32 - 1
DEFAULT_PORT = 1071

# registered output-data tags
BLOB_TAGS = frozenset({"boun", "imag", "tran", "rigi", "coll", "gray", "audi", "erro"})


@dataclass
class CommandEnvelope:
    """One validated instruction: the "$type" discriminator plus its params."""

    type_name: str
    params: dict = field(default_factory=dict)

    def to_wire(self) -> dict:
        return {"$type": self.type_name, **self.params}


def encode_frame(payload: bytes) -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise OversizePayload(f"payload of {len(payload)} bytes exceeds u32 length prefix")
    return struct.pack("<I", len(payload)) + payload


def decode_frame(data: bytes) -> bytes:
    if len(data) < 4:
        raise MalformedFrame("frame shorter than its length prefix")
    (length,) = struct.unpack_from("<I", data)
    if len(data) != 4 + length:
        raise MalformedFrame(f"declared {length} payload bytes, got {len(data) - 4}")
    return data[4:]


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def encode_command_list(envelopes: list[CommandEnvelope]) -> bytes:
    return encode_frame(canonical_json([e.to_wire() for e in envelopes]))


def decode_command_list(data: bytes, registry) -> list[CommandEnvelope]:
    """Decode one framed request and validate each command against registry."""
    payload = decode_frame(data)
    try:
        raw = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedFrame(f"payload is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise MalformedFrame("request must be a JSON array of command objects")
    return [registry.validate(obj) for obj in raw]


def encode_response(outputs: list[dict], frame: int) -> bytes:
    for blob in outputs:
        tag = blob.get("$type_id")
        if tag not in BLOB_TAGS:
            raise ProtocolError(f"unregistered output tag: {tag!r}")
    return encode_frame(canonical_json([*outputs, frame]))


def decode_response(data: bytes) -> tuple[list[dict], int]:
    payload = decode_frame(data)
    try:
        raw = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedFrame(f"payload is not valid JSON: {exc}") from exc
    if not isinstance(raw, list) or not raw or not isinstance(raw[-1], int):
        raise MalformedFrame("response must be a JSON array ending in the frame counter")
    return raw[:-1], raw[-1]


def send_frame(sock: socket.socket, payload: bytes) -> None:
    sock.sendall(encode_frame(payload))


def recv_frame(sock: socket.socket) -> bytes:
    """Read one complete frame from a stream socket; b"" on clean EOF."""
    header = _recv_exact(sock, 4)
    if not header:
        return b""
    (length,) = struct.unpack("<I", header)
    payload = _recv_exact(sock, length)
    if length and not payload:
        raise MalformedFrame("connection closed mid-frame")
    return header + payload


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return b"" if not buf else buf
        buf += chunk
    return buf
