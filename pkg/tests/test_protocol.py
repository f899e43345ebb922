import json

import pytest
from hypothesis import given, strategies as st

from deskworld.errors import MalformedFrame, OversizePayload, ProtocolError
from deskworld.protocol import (
    BLOB_TAGS, CommandEnvelope, canonical_json, decode_command_list,
    decode_frame, decode_response, encode_command_list, encode_frame,
    encode_response,
)
from deskworld.schema import builtin_registry


def test_frame_roundtrip():
    payload = b'{"hello": 1}'
    framed = encode_frame(payload)
    assert framed[:4] == len(payload).to_bytes(4, "little")
    assert decode_frame(framed) == payload


def test_frame_empty_payload():
    assert decode_frame(encode_frame(b"")) == b""


def test_decode_frame_rejects_truncation():
    framed = encode_frame(b"abcdef")
    with pytest.raises(MalformedFrame):
        decode_frame(framed[:-1])
    with pytest.raises(MalformedFrame):
        decode_frame(b"\x01")


def test_oversize_payload_raises():
    class FakeBytes(bytes):
        def __len__(self):
            return 2 ** 32

    with pytest.raises(OversizePayload):
        encode_frame(FakeBytes())


@given(st.binary(max_size=2048))
def test_frame_roundtrip_property(payload):
    assert decode_frame(encode_frame(payload)) == payload


def test_canonical_json_is_sorted_and_compact():
    data = canonical_json({"b": 1, "a": {"z": 2, "y": 3}})
    assert data == b'{"a":{"y":3,"z":2},"b":1}'


def test_command_list_roundtrip():
    reg = builtin_registry()
    envs = [CommandEnvelope("load_scene", {"scene_name": "x"}),
            CommandEnvelope("set_random_seed", {"seed": 42})]
    wire = encode_command_list(envs)
    decoded = decode_command_list(wire, reg)
    assert [e.type_name for e in decoded] == ["load_scene", "set_random_seed"]
    assert decoded[1].params["seed"] == 42


def test_command_list_rejects_non_array():
    reg = builtin_registry()
    with pytest.raises(MalformedFrame):
        decode_command_list(encode_frame(b'{"$type":"terminate"}'), reg)
    with pytest.raises(MalformedFrame):
        decode_command_list(encode_frame(b"not json"), reg)


def test_response_frame_counter_last():
    wire = encode_response([{"$type_id": "boun", "objects": []}], 7)
    outputs, frame = decode_response(wire)
    assert frame == 7
    assert outputs == [{"$type_id": "boun", "objects": []}]
    raw = json.loads(decode_frame(wire))
    assert raw[-1] == 7


def test_response_rejects_unknown_tag():
    with pytest.raises(ProtocolError):
        encode_response([{"$type_id": "nope"}], 1)


def test_blob_tags_are_four_ascii_chars():
    for tag in BLOB_TAGS:
        assert len(tag) == 4 and tag.isascii()


def test_response_decode_requires_trailing_int():
    with pytest.raises(MalformedFrame):
        decode_response(encode_frame(b'[{"$type_id":"boun"}]'))
    with pytest.raises(MalformedFrame):
        decode_response(encode_frame(b"[]"))


def test_reencode_byte_identical():
    reg = builtin_registry()
    cmds = [{"$type": "add_object", "name": "unit_cube", "id": 3,
             "position": {"x": 0.5, "y": 0.25, "z": -1.0}}]
    wire = encode_frame(canonical_json(cmds))
    envs = decode_command_list(wire, reg)
    # drop optional-default params before re-encoding: wire form only carries
    # what the sender wrote
    wire2 = canonical_json([
        {"$type": e.type_name,
         **{k: v for k, v in e.params.items() if k in cmds[0]}}
        for e in envs
    ])
    assert wire2 == canonical_json(cmds)
