"""Typed wrappers over the server's output blobs.

Every response element before the trailing frame counter is a dict with a
four-character ``$type_id`` tag; these classes expose the fields through
the accessor style the wider controller code expects.
"""

from __future__ import annotations

import base64

import numpy as np


class OutputData:
    @staticmethod
    def get_data_type_id(blob: dict) -> str:
        return blob["$type_id"]


class _TopValue(float):
    """A bounds coordinate: behaves as its y value, but also indexes (x, y, z).

    Controller code uses ``get_top(i)`` both as a scalar height and as an
    indexable point, so this float subclass carries the full vector.
    """

    def __new__(cls, x: float, y: float, z: float):
        self = super().__new__(cls, y)
        self._xyz = (x, y, z)
        return self

    def __getitem__(self, index: int) -> float:
        return self._xyz[index]

    @property
    def x(self) -> float:
        return self._xyz[0]

    @property
    def y(self) -> float:
        return self._xyz[1]

    @property
    def z(self) -> float:
        return self._xyz[2]


def _point(d: dict) -> _TopValue:
    return _TopValue(d["x"], d["y"], d["z"])


class Bounds(OutputData):
    def __init__(self, blob: dict):
        self._objects = blob["objects"]

    def get_num(self) -> int:
        return len(self._objects)

    def get_id(self, index: int) -> int:
        return self._objects[index]["id"]

    def get_top(self, index: int) -> _TopValue:
        return _point(self._objects[index]["top"])

    def get_bottom(self, index: int) -> _TopValue:
        return _point(self._objects[index]["bottom"])

    def get_center(self, index: int) -> _TopValue:
        return _point(self._objects[index]["center"])

    def get_front(self, index: int) -> _TopValue:
        return _point(self._objects[index]["front"])

    def get_back(self, index: int) -> _TopValue:
        return _point(self._objects[index]["back"])

    def get_left(self, index: int) -> _TopValue:
        return _point(self._objects[index]["left"])

    def get_right(self, index: int) -> _TopValue:
        return _point(self._objects[index]["right"])


def _decode_ppm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = (int(x) for x in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


def _decode_pfm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"Pf":
        raise ValueError("not a grayscale PFM")
    w, h = (int(x) for x in parts[1].split())
    dtype = "<f4" if float(parts[2]) < 0 else ">f4"
    return np.flipud(np.frombuffer(parts[3], dtype=dtype).reshape(h, w)) \
        .astype(np.float64)


def _decode_id64(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 2)
    if parts[0] != b"ID64":
        raise ValueError("not an id-pass payload")
    w, h = (int(x) for x in parts[1].split())
    return np.frombuffer(parts[2], dtype="<i8").reshape(h, w)


class Images(OutputData):
    """One rendered pass for one avatar."""

    def __init__(self, blob: dict):
        self._blob = blob

    def get_avatar_id(self) -> str:
        return self._blob["avatar_id"]

    def get_pass_mask(self) -> str:
        return self._blob["pass"]

    def get_width(self) -> int:
        return self._blob["width"]

    def get_height(self) -> int:
        return self._blob["height"]

    def get_raw(self) -> bytes:
        return base64.b64decode(self._blob["data_b64"])

    def get_image(self) -> np.ndarray:
        raw = self.get_raw()
        mask = self.get_pass_mask()
        if mask == "_depth":
            return _decode_pfm(raw)
        if mask == "_id":
            return _decode_id64(raw)
        return _decode_ppm(raw)


class Transforms(OutputData):
    def __init__(self, blob: dict):
        self._items = blob["transforms"]

    def get_num(self) -> int:
        return len(self._items)

    def get_id(self, index: int) -> int:
        return self._items[index]["id"]

    def get_position(self, index: int) -> tuple:
        p = self._items[index]["position"]
        return (p["x"], p["y"], p["z"])

    def get_rotation(self, index: int) -> tuple:
        r = self._items[index]["rotation"]
        return (r["w"], r["x"], r["y"], r["z"])


class Rigidbodies(OutputData):
    def __init__(self, blob: dict):
        self._items = blob["rigidbodies"]

    def get_num(self) -> int:
        return len(self._items)

    def get_id(self, index: int) -> int:
        return self._items[index]["id"]

    def get_mass(self, index: int) -> float:
        return self._items[index]["mass"]

    def get_velocity(self, index: int) -> tuple:
        v = self._items[index]["velocity"]
        return (v["x"], v["y"], v["z"])

    def get_angular_velocity(self, index: int) -> tuple:
        v = self._items[index]["angular_velocity"]
        return (v["x"], v["y"], v["z"])

    def get_kinematic(self, index: int) -> bool:
        return self._items[index]["kinematic"]


class Collisions(OutputData):
    def __init__(self, blob: dict):
        self._items = blob["collisions"]

    def get_num(self) -> int:
        return len(self._items)

    def get_ids(self, index: int) -> tuple:
        return tuple(self._items[index]["ids"])

    def get_state(self, index: int) -> str:
        return self._items[index]["state"]

    def get_impulse(self, index: int) -> float:
        return self._items[index]["impulse"]

    def get_relative_velocity(self, index: int) -> float:
        return self._items[index]["relative_velocity"]


class AudioData(OutputData):
    def __init__(self, blob: dict):
        self._blob = blob

    def get_ids(self) -> tuple:
        return tuple(self._blob["ids"])

    def get_sample_rate(self) -> int:
        return self._blob["sample_rate"]

    def get_wav(self) -> bytes:
        return base64.b64decode(self._blob["wav_b64"])


class Grayscale(OutputData):
    def __init__(self, blob: dict):
        self._blob = blob

    def get_grayscale(self) -> float:
        return self._blob["grayscale"]

    def get_object_id(self) -> int:
        return self._blob["object_id"]


class ErrorData(OutputData):
    def __init__(self, blob: dict):
        self._blob = blob

    def get_error(self) -> str:
        return self._blob["error"]

    def get_message(self) -> str:
        return self._blob["message"]

    def get_command(self) -> str:
        return self._blob["command"]
