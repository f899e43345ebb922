"""Scene state: model library, objects, avatars, static room geometry.

The world owns the authoritative id -> object map and steps the physics
engine exactly once per dispatched command list.  Iteration over objects
is always in ascending id order so every run of the same transcript
produces identical output.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateLookAt, DuplicateAvatarId, DuplicateId, LibraryNotFound,
    MeshLoadError, RecordNotFound, UnknownAvatar, UnknownObject,
)
from .mathutil import (
    Quat, Vec3, IDENTITY_QUAT, look_rotation, q_from_euler_deg, v_norm, v_sub,
)
from .physics.hull import Collider, ConvexHull, SphereCollider, mass_properties, quickhull
from .physics.solver import (
    CollisionEvent, PhysicsEngine, RigidBody, SolverConfig, apply_impulse,
)

STATIC_ID_BASE = 1_000_000_000    # floor/wall pseudo-object ids
AVATAR_ID_BASE = 2_000_000_000    # embodied avatar body ids

AUDIO_MATERIALS = ("cardboard", "wood", "metal", "ceramic", "glass", "plastic")

DEFAULT_FOV = 54.43               # vertical degrees, 35 mm-equivalent default
DEFAULT_RESOLUTION = (256, 256)


@dataclass
class ModelRecord:
    name: str
    mesh_uri: str
    scale_factor: float = 1.0
    wcategory: str = "object"
    density: float = 1000.0
    audio_material: str = "wood"
    default_static_friction: float = 0.6
    default_dynamic_friction: float = 0.5
    default_bounciness: float = 0.2
    collider: dict = field(default_factory=lambda: {"type": "hull"})

    def validate(self) -> None:
        if self.density <= 0:
            raise ValueError(f"{self.name}: density must be positive")
        if self.scale_factor <= 0:
            raise ValueError(f"{self.name}: scale_factor must be positive")
        if not 0.0 <= self.default_bounciness <= 1.0:
            raise ValueError(f"{self.name}: bounciness outside [0, 1]")
        if self.audio_material not in AUDIO_MATERIALS:
            raise ValueError(f"{self.name}: unknown audio material {self.audio_material}")

    def get_url(self) -> str:
        return f"file://{self.mesh_uri}"


class ModelLibrary:
    """JSON records file plus mesh resolution relative to it."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        if not self.path.is_file():
            raise LibraryNotFound(str(path))
        try:
            raw = json.loads(self.path.read_text())
        except json.JSONDecodeError as exc:
            raise LibraryNotFound(f"{path}: not valid JSON: {exc}") from exc
        self.records: dict[str, ModelRecord] = {}
        for entry in raw:
            rec = ModelRecord(**entry)
            rec.validate()
            if rec.name in self.records:
                raise ValueError(f"duplicate record name {rec.name}")
            self.records[rec.name] = rec

    def get_record(self, name: str) -> ModelRecord:
        try:
            return self.records[name]
        except KeyError:
            raise RecordNotFound(name) from None

    def mesh_path(self, uri: str) -> Path:
        if uri.startswith("file://"):
            uri = uri[len("file://"):]
        p = Path(uri)
        return p if p.is_absolute() else self.path.parent / p


def bundled_library_path() -> Path:
    return Path(__file__).parent / "assets" / "library.json"


def load_record(library_path: str | Path, name: str) -> ModelRecord:
    return ModelLibrary(library_path).get_record(name)


def load_obj(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """ASCII OBJ subset: v and f lines, faces fan-triangulated."""
    verts: list[list[float]] = []
    faces: list[list[int]] = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MeshLoadError(f"{path}: {exc}") from exc
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise MeshLoadError(f"{path}: malformed vertex line: {line!r}")
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(tok.split("/")[0]) for tok in parts[1:]]
            idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
            for k in range(1, len(idx) - 1):
                faces.append([idx[0], idx[k], idx[k + 1]])
    if len(verts) < 4 or not faces:
        raise MeshLoadError(f"{path}: needs at least 4 vertices and one face")
    return np.array(verts, dtype=np.float64), np.array(faces, dtype=np.intp)


@dataclass
class SceneObject:
    id: int
    record_name: str
    category: str
    body: RigidBody
    audio_material: str
    segmentation_color: tuple[int, int, int]


@dataclass
class Avatar:
    avatar_id: str
    kind: str                      # disembodied_camera | sphere_embodied | capsule_embodied
    position: Vec3 = (0.0, 0.0, 0.0)
    orientation: Quat = IDENTITY_QUAT
    fov: float = DEFAULT_FOV
    resolution: tuple[int, int] = DEFAULT_RESOLUTION
    pass_masks: set = field(default_factory=lambda: {"_img"})
    body: RigidBody | None = None  # embodied kinds only

    @property
    def pose(self) -> tuple[Vec3, Quat]:
        if self.body is not None:
            return self.body.position, self.orientation
        return self.position, self.orientation


def _avatar_kind(type_name: str) -> str:
    mapping = {
        "A_Img_Caps_Kinematic": "disembodied_camera",
        "disembodied_camera": "disembodied_camera",
        "sphere_embodied": "sphere_embodied",
        "A_Simple_Body": "sphere_embodied",
        "capsule_embodied": "capsule_embodied",
    }
    if type_name not in mapping:
        raise ValueError(f"unknown avatar type {type_name!r}")
    return mapping[type_name]


def _capsule_points(radius: float, half_height: float, segments: int = 12) -> np.ndarray:
    """Sampled capsule surface points for hulling."""
    pts = []
    for ring in range(segments // 2 + 1):
        phi = math.pi / 2 * ring / (segments // 2)
        y = math.sin(phi) * radius
        r = math.cos(phi) * radius
        for k in range(segments):
            th = 2 * math.pi * k / segments
            pts.append((r * math.cos(th), half_height + y, r * math.sin(th)))
            pts.append((r * math.cos(th), -half_height - y, r * math.sin(th)))
    return np.array(pts)


def segmentation_color(object_id: int, taken: set[tuple[int, int, int]]) -> tuple[int, int, int]:
    """Deterministic id -> RGB with collision probing; never black."""
    salt = 0
    while True:
        digest = hashlib.md5(f"{object_id}:{salt}".encode()).digest()
        color = (digest[0], digest[1], digest[2])
        if color != (0, 0, 0) and color not in taken:
            return color
        salt += 1


class World:
    def __init__(
        self,
        library: ModelLibrary | None = None,
        seed: int = 0,
        solver_config: SolverConfig | None = None,
    ):
        self.library = library or ModelLibrary(bundled_library_path())
        self.engine = PhysicsEngine(solver_config)
        self.objects: dict[int, SceneObject] = {}
        self.avatars: dict[str, Avatar] = {}
        self.statics: dict[int, SceneObject] = {}
        self.gravity: Vec3 = (0.0, -9.81, 0.0)
        self.frame = 0
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.last_events: list[CollisionEvent] = []
        self._colors: set[tuple[int, int, int]] = set()
        self._hull_cache: dict[tuple, list[Collider]] = {}

    # -- scene lifecycle ---------------------------------------------------

    def load_scene(self, scene_name: str) -> None:
        self.objects.clear()
        self.avatars.clear()
        self.statics.clear()
        self._colors.clear()
        self.gravity = (0.0, -9.81, 0.0)
        self.engine.clear_cache()
        self.scene_name = scene_name

    def create_empty_room(self, width: float, length: float,
                          wall_height: float = 3.0, wall_thickness: float = 0.1) -> None:
        """Static floor plus four walls around (0,0), floor top at y=0."""
        if width <= 0 or length <= 0:
            raise ValueError("room dimensions must be positive")
        hw, hl, t, h = width / 2, length / 2, wall_thickness, wall_height
        slabs = [
            ((-hw - t, -0.2, -hl - t), (hw + t, 0.0, hl + t)),     # floor
            ((-hw - t, 0.0, -hl - t), (-hw, h, hl + t)),           # -x wall
            ((hw, 0.0, -hl - t), (hw + t, h, hl + t)),             # +x wall
            ((-hw, 0.0, -hl - t), (hw, h, -hl)),                   # -z wall
            ((-hw, 0.0, hl), (hw, h, hl + t)),                     # +z wall
        ]
        for k, (lo, hi) in enumerate(slabs):
            corners = np.array([
                (x, y, z)
                for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])
            ])
            hull = quickhull(corners)
            sid = STATIC_ID_BASE + k
            body = RigidBody(sid, [hull], 1.0, (0.0, 0.0, 0.0), np.eye(3), static=True)
            color = segmentation_color(sid, self._colors)
            self._colors.add(color)
            self.statics[sid] = SceneObject(
                sid, "room_floor" if k == 0 else "room_wall", "environment",
                body, "wood", color,
            )

    # -- objects -----------------------------------------------------------

    def _build_colliders(self, record: ModelRecord, scale: float) -> list[Collider]:
        key = (record.name, scale)
        cached = self._hull_cache.get(key)
        if cached is not None:
            return cached
        ctype = record.collider.get("type", "hull")
        if ctype == "sphere":
            center = np.array([0.0, record.collider.get("center_y", 0.0) * scale, 0.0])
            colliders: list[Collider] = [
                SphereCollider(record.collider["radius"] * scale, center)
            ]
        elif ctype == "compound":
            colliders = []
            for part in record.collider["parts"]:
                verts, _ = load_obj(self.library.mesh_path(part))
                colliders.append(quickhull(verts * scale))
        else:
            verts, _ = load_obj(self.library.mesh_path(record.mesh_uri))
            colliders = [quickhull(verts * scale)]
        self._hull_cache[key] = colliders
        return colliders

    def add_object(
        self,
        name: str,
        object_id: int,
        position: Vec3 = (0.0, 0.0, 0.0),
        rotation: Quat | None = None,
        scale_factor: float | None = None,
        category: str | None = None,
        url: str | None = None,
    ) -> SceneObject:
        if object_id in self.objects:
            raise DuplicateId(f"object id {object_id} already in scene")
        record = self.library.get_record(name)
        if url is not None and url.startswith("file://"):
            record = ModelRecord(**{**record.__dict__, "mesh_uri": url})
        scale = record.scale_factor if scale_factor is None else scale_factor
        colliders = self._build_colliders(record, scale)
        mass, com, inertia = mass_properties(colliders, record.density)
        body = RigidBody(
            object_id, colliders, mass, (float(com[0]), float(com[1]), float(com[2])),
            inertia,
            position=position,
            orientation=rotation or IDENTITY_QUAT,
            static_friction=record.default_static_friction,
            dynamic_friction=record.default_dynamic_friction,
            bounciness=record.default_bounciness,
        )
        color = segmentation_color(object_id, self._colors)
        self._colors.add(color)
        obj = SceneObject(
            object_id, record.name, category or record.wcategory, body,
            record.audio_material, color,
        )
        self.objects[object_id] = obj
        return obj

    def destroy_object(self, object_id: int) -> None:
        obj = self.get_object(object_id)
        self._colors.discard(obj.segmentation_color)
        del self.objects[object_id]

    def get_object(self, object_id: int) -> SceneObject:
        obj = self.objects.get(object_id) or self.statics.get(object_id)
        if obj is None:
            raise UnknownObject(str(object_id))
        return obj

    def object_ids(self) -> list[int]:
        return sorted(self.objects)

    # -- avatars -----------------------------------------------------------

    def create_avatar(self, type_name: str, avatar_id: str) -> Avatar:
        if avatar_id in self.avatars:
            raise DuplicateAvatarId(avatar_id)
        kind = _avatar_kind(type_name)
        body = None
        if kind == "sphere_embodied":
            collider: Collider = SphereCollider(0.5)
        elif kind == "capsule_embodied":
            collider = quickhull(_capsule_points(0.35, 0.55))
        if kind != "disembodied_camera":
            mass, com, inertia = mass_properties([collider], 1000.0)
            body = RigidBody(
                AVATAR_ID_BASE + len(self.avatars), [collider], mass,
                (float(com[0]), float(com[1]), float(com[2])), inertia,
            )
        avatar = Avatar(avatar_id, kind, body=body)
        self.avatars[avatar_id] = avatar
        return avatar

    def get_avatar(self, avatar_id: str | None) -> Avatar:
        if avatar_id is None:
            if len(self.avatars) == 1:
                return next(iter(self.avatars.values()))
            raise UnknownAvatar("avatar_id required when multiple avatars exist")
        av = self.avatars.get(avatar_id)
        if av is None:
            raise UnknownAvatar(avatar_id)
        return av

    def teleport_avatar(self, avatar_id: str | None, position: Vec3) -> None:
        av = self.get_avatar(avatar_id)
        if av.body is not None:
            av.body.position = position
            av.body.linear_velocity = (0.0, 0.0, 0.0)
            av.body.angular_velocity = (0.0, 0.0, 0.0)
        av.position = position

    def look_at(self, avatar_id: str | None, object_id: int) -> Quat:
        av = self.get_avatar(avatar_id)
        target = self.bounds_center(object_id)
        pos = av.pose[0]
        direction = v_sub(target, pos)
        if v_norm(direction) < 1e-9:
            raise DegenerateLookAt("avatar and target coincide")
        av.orientation = look_rotation(direction)
        return av.orientation

    def bounds_center(self, object_id: int) -> Vec3:
        from .sensors import compute_bounds  # local import to avoid a cycle
        b = compute_bounds(self, object_id)
        return b.center

    # -- stepping ----------------------------------------------------------

    def all_bodies(self) -> list[RigidBody]:
        bodies = [o.body for o in self.statics.values()]
        bodies += [self.objects[i].body for i in sorted(self.objects)]
        bodies += [a.body for a in self.avatars.values() if a.body is not None]
        return bodies

    def body_for_id(self, body_id: int) -> RigidBody | None:
        obj = self.objects.get(body_id) or self.statics.get(body_id)
        if obj is not None:
            return obj.body
        for a in self.avatars.values():
            if a.body is not None and a.body.id == body_id:
                return a.body
        return None

    def audio_material_for(self, body_id: int) -> str | None:
        obj = self.objects.get(body_id) or self.statics.get(body_id)
        return obj.audio_material if obj else None

    def step(self, dt: float | None = None) -> list[CollisionEvent]:
        self.frame += 1
        events = self.engine.step(self.all_bodies(), self.gravity, dt, frame=self.frame)
        # keep disembodied avatar positions in sync with embodied bodies
        for a in self.avatars.values():
            if a.body is not None:
                a.position = a.body.position
        self.last_events = events
        return events

    def set_seed(self, seed: int) -> None:
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def apply_impulse(self, object_id: int, impulse: Vec3, point: Vec3 | None = None) -> None:
        apply_impulse(self.get_object(object_id).body, impulse, point)

    @staticmethod
    def rotation_from_dict(rot: dict) -> Quat:
        return q_from_euler_deg(rot.get("x", 0.0), rot.get("y", 0.0), rot.get("z", 0.0))
