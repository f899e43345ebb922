"""Raycast camera passes, object bounds and the grayscale reduction.

The renderer traces one primary ray per pixel through a pinhole model and
intersects convex colliders analytically (half-space clipping for hulls,
quadratic roots for spheres).  The nearest hit wins; exact depth ties go to
the lower object id.  Results are a pure function of the world snapshot.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass

import numpy as np

from .errors import PassNotEnabled
from .mathutil import Vec3, q_to_matrix
from .physics.hull import ConvexHull, SphereCollider

NEAR_CLIP = 0.01

PASS_MASKS = ("_img", "_id", "_depth")


@dataclass
class CameraIntrinsics:
    vertical_fov: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if not 0.0 < self.vertical_fov < 180.0:
            raise ValueError("vertical_fov outside (0, 180)")
        if self.width < 1 or self.height < 1:
            raise ValueError("resolution must be at least 1x1")


@dataclass
class Bounds:
    id: int
    center: Vec3
    top: Vec3
    bottom: Vec3
    left: Vec3
    right: Vec3
    front: Vec3
    back: Vec3

    def to_dict(self) -> dict:
        def v(p):
            return {"x": p[0], "y": p[1], "z": p[2]}
        return {"id": self.id, "center": v(self.center), "top": v(self.top),
                "bottom": v(self.bottom), "left": v(self.left), "right": v(self.right),
                "front": v(self.front), "back": v(self.back)}


def compute_bounds(world, object_id: int) -> Bounds:
    obj = world.get_object(object_id)
    body = obj.body
    r = q_to_matrix(body.orientation)
    p = np.asarray(body.position)
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    for c in body.colliders:
        if isinstance(c, SphereCollider):
            center = p + r @ c.center
            lo = np.minimum(lo, center - c.radius)
            hi = np.maximum(hi, center + c.radius)
        else:
            world_verts = c.vertices @ r.T + p
            lo = np.minimum(lo, world_verts.min(axis=0))
            hi = np.maximum(hi, world_verts.max(axis=0))
    cx, cy, cz = (lo + hi) / 2.0
    return Bounds(
        id=object_id,
        center=(float(cx), float(cy), float(cz)),
        top=(float(cx), float(hi[1]), float(cz)),
        bottom=(float(cx), float(lo[1]), float(cz)),
        left=(float(lo[0]), float(cy), float(cz)),
        right=(float(hi[0]), float(cy), float(cz)),
        front=(float(cx), float(cy), float(hi[2])),
        back=(float(cx), float(cy), float(lo[2])),
    )


def camera_rays(orientation, intrinsics: CameraIntrinsics) -> np.ndarray:
    """(H*W, 3) unit world-space ray directions, row-major, row 0 at image top."""
    w, h = intrinsics.width, intrinsics.height
    tan_v = np.tan(np.radians(intrinsics.vertical_fov) / 2.0)
    tan_h = tan_v * w / h
    u = (2.0 * (np.arange(w) + 0.5) / w - 1.0) * tan_h
    v = (1.0 - 2.0 * (np.arange(h) + 0.5) / h) * tan_v
    uu, vv = np.meshgrid(u, v)
    dirs = np.stack([uu.ravel(), vv.ravel(), np.ones(w * h)], axis=1)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rot = q_to_matrix(orientation)
    return dirs @ rot.T


def _ray_hull(origin: np.ndarray, dirs: np.ndarray, hull: ConvexHull,
              position, orientation) -> np.ndarray:
    """Per-ray hit distance against one hull; +inf where missed."""
    rot = q_to_matrix(orientation)
    p = np.asarray(position)
    normals = hull.normals @ rot.T                       # (F, 3) world
    offsets = hull.offsets + normals @ p                 # (F,)
    denom = dirs @ normals.T                             # (N, F)
    num = offsets - origin @ normals.T                   # (F,)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = num / denom
    entering = np.where(denom < 0.0, t, -np.inf)
    exiting = np.where(denom > 0.0, t, np.inf)
    # parallel ray outside any face plane can never hit
    outside_parallel = ((denom == 0.0) & (num < 0.0)).any(axis=1)
    t_near = entering.max(axis=1)
    t_far = exiting.min(axis=1)
    hit = (~outside_parallel) & (t_near <= t_far) & (t_far >= NEAR_CLIP)
    t_hit = np.where(t_near >= NEAR_CLIP, t_near, t_far)
    return np.where(hit, t_hit, np.inf)


def _ray_sphere(origin: np.ndarray, dirs: np.ndarray, sphere: SphereCollider,
                position, orientation) -> np.ndarray:
    rot = q_to_matrix(orientation)
    center = np.asarray(position) + rot @ sphere.center
    oc = origin - center
    b = dirs @ oc
    c = oc @ oc - sphere.radius ** 2
    disc = b * b - c
    sq = np.sqrt(np.maximum(disc, 0.0))
    t0 = -b - sq
    t1 = -b + sq
    t_hit = np.where(t0 >= NEAR_CLIP, t0, t1)
    hit = (disc >= 0.0) & (t_hit >= NEAR_CLIP)
    return np.where(hit, t_hit, np.inf)


def _renderable_bodies(world, avatar):
    items = []
    for sid in sorted(world.statics):
        items.append((sid, world.statics[sid].body))
    for oid in sorted(world.objects):
        items.append((oid, world.objects[oid].body))
    for a in world.avatars.values():
        if a.body is not None and a is not avatar:
            items.append((a.body.id, a.body))
    return items


def render_id_depth(world, avatar) -> tuple[np.ndarray, np.ndarray]:
    """(id image int64 H*W->HxW, depth image float64 HxW, +inf background)."""
    intr = CameraIntrinsics(avatar.fov, *avatar.resolution)
    pos, orient = avatar.pose
    origin = np.asarray(pos, dtype=np.float64)
    dirs = camera_rays(orient, intr)
    n = dirs.shape[0]
    depth = np.full(n, np.inf)
    ids = np.zeros(n, dtype=np.int64)
    for oid, body in _renderable_bodies(world, avatar):
        for coll in body.colliders:
            if isinstance(coll, SphereCollider):
                t = _ray_sphere(origin, dirs, coll, body.position, body.orientation)
            else:
                t = _ray_hull(origin, dirs, coll, body.position, body.orientation)
            closer = t < depth        # strict: ids ascend, so ties keep the lower id
            depth[closer] = t[closer]
            ids[closer] = oid
    h, w = intr.height, intr.width
    return ids.reshape(h, w), depth.reshape(h, w)


def render_pass(world, avatar, mask: str) -> np.ndarray:
    if mask not in avatar.pass_masks:
        raise PassNotEnabled(f"{mask} not enabled for avatar {avatar.avatar_id}")
    ids, depth = render_id_depth(world, avatar)
    if mask == "_depth":
        return depth
    if mask == "_id":
        return ids
    return colorize(world, ids)


def colorize(world, ids: np.ndarray) -> np.ndarray:
    """Flat per-object segmentation colors; background black."""
    img = np.zeros((*ids.shape, 3), dtype=np.uint8)
    for oid in np.unique(ids):
        if oid == 0:
            continue
        obj = world.objects.get(int(oid)) or world.statics.get(int(oid))
        if obj is None:
            for a in world.avatars.values():
                if a.body is not None and a.body.id == oid:
                    img[ids == oid] = (200, 200, 200)
            continue
        img[ids == oid] = obj.segmentation_color
    return img


def grayscale(world, avatar, target_id: int) -> float:
    """Fraction of the frame covered by target_id in the id pass."""
    world.get_object(target_id)
    ids, _ = render_id_depth(world, avatar)
    return float(np.count_nonzero(ids == target_id)) / ids.size


# -- lossless image serialization -----------------------------------------


def encode_ppm(rgb: np.ndarray) -> bytes:
    h, w, _ = rgb.shape
    return b"P6\n%d %d\n255\n" % (w, h) + rgb.astype(np.uint8).tobytes()


def decode_ppm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = (int(x) for x in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


def encode_pfm(depth: np.ndarray) -> bytes:
    """Grayscale PFM, negative scale = little-endian, rows bottom-to-top."""
    h, w = depth.shape
    body = np.flipud(depth).astype("<f4").tobytes()
    return b"Pf\n%d %d\n-1.0\n" % (w, h) + body


def decode_pfm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"Pf":
        raise ValueError("not a grayscale PFM")
    w, h = (int(x) for x in parts[1].split())
    scale = float(parts[2])
    dtype = "<f4" if scale < 0 else ">f4"
    img = np.frombuffer(parts[3], dtype=dtype).reshape(h, w)
    return np.flipud(img).astype(np.float64)


def image_blob(avatar_id: str, pass_name: str, image: np.ndarray) -> dict:
    if pass_name == "_depth":
        data = encode_pfm(image)
        h, w = image.shape
    elif pass_name == "_id":
        h, w = image.shape
        data = b"ID64\n%d %d\n" % (w, h) + image.astype("<i8").tobytes()
    else:
        data = encode_ppm(image)
        h, w = image.shape[:2]
    return {
        "$type_id": "imag",
        "avatar_id": avatar_id,
        "pass": pass_name,
        "width": w,
        "height": h,
        "data_b64": base64.b64encode(data).decode("ascii"),
    }


def decode_id_blob(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 2)
    if parts[0] != b"ID64":
        raise ValueError("not an id-pass payload")
    w, h = (int(x) for x in parts[1].split())
    return np.frombuffer(parts[2], dtype="<i8").reshape(h, w)
