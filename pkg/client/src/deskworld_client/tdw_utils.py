"""Client-side command builders."""

from __future__ import annotations


class BadDimensions(Exception):
    pass


class TDWUtils:
    """Static helpers that emit server commands."""

    @staticmethod
    def create_empty_room(width: float, length: float) -> dict:
        if width <= 0 or length <= 0:
            raise BadDimensions(f"room dimensions must be positive, "
                                f"got {width} x {length}")
        return {"$type": "create_empty_room", "width": width, "length": length}

    @staticmethod
    def vector3_to_dict(v) -> dict:
        x, y, z = v
        return {"x": float(x), "y": float(y), "z": float(z)}

    @staticmethod
    def array_to_vector3(d: dict) -> tuple:
        return (d["x"], d["y"], d["z"])
