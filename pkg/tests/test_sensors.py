import math

import numpy as np
import pytest

from deskworld.errors import PassNotEnabled, UnknownObject
from deskworld.mathutil import q_from_euler_deg, q_to_matrix
from deskworld.physics.hull import SphereCollider
from deskworld.sensors import (
    NEAR_CLIP, CameraIntrinsics, camera_rays, compute_bounds, decode_id_blob,
    decode_pfm, decode_ppm, encode_pfm, encode_ppm, grayscale, image_blob,
    render_id_depth, render_pass,
)
from deskworld.world import World


def make_world(room=8.0):
    w = World()
    w.load_scene("ProcGenScene")
    w.create_empty_room(room, room)
    return w


def add_camera(world, position, look_at_id=None, resolution=(32, 32)):
    av = world.create_avatar("A_Img_Caps_Kinematic", "cam")
    av.resolution = resolution
    world.teleport_avatar("cam", position)
    if look_at_id is not None:
        world.look_at("cam", look_at_id)
    return av


# -- independent renderer oracle: per-triangle Moller-Trumbore ---------------


def _tri_intersect(origin, dirs, v0, v1, v2):
    """Hit distance of each ray against one triangle; +inf where missed."""
    e1, e2 = v1 - v0, v2 - v0
    p = np.cross(dirs, e2)
    det = p @ e1
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
    s = origin - v0
    u = (p @ s) * inv
    q = np.cross(s, e1)
    v = (dirs @ q) * inv
    t = (e2 @ q) * inv
    eps = 1e-12
    ok = (np.abs(det) > eps) & (u >= -eps) & (v >= -eps) & (u + v <= 1 + eps) \
        & (t >= NEAR_CLIP)
    return np.where(ok, t, np.inf)


def oracle_render(world, avatar):
    """Every-triangle intersector; same strict-min/ascending-id convention."""
    intr = CameraIntrinsics(avatar.fov, *avatar.resolution)
    pos, orient = avatar.pose
    origin = np.asarray(pos, dtype=float)
    dirs = camera_rays(orient, intr)
    depth = np.full(dirs.shape[0], np.inf)
    ids = np.zeros(dirs.shape[0], dtype=np.int64)
    items = [(sid, world.statics[sid].body) for sid in sorted(world.statics)]
    items += [(oid, world.objects[oid].body) for oid in sorted(world.objects)]
    items += [(a.body.id, a.body) for a in world.avatars.values()
              if a.body is not None and a is not avatar]
    for oid, body in items:
        rot = q_to_matrix(body.orientation)
        p = np.asarray(body.position)
        t_body = np.full(dirs.shape[0], np.inf)
        for coll in body.colliders:
            if isinstance(coll, SphereCollider):
                center = p + rot @ coll.center
                oc = origin - center
                b = dirs @ oc
                c = oc @ oc - coll.radius ** 2
                disc = b * b - c
                sq = np.sqrt(np.maximum(disc, 0.0))
                t0, t1 = -b - sq, -b + sq
                t = np.where(t0 >= NEAR_CLIP, t0, t1)
                t = np.where((disc >= 0.0) & (t >= NEAR_CLIP), t, np.inf)
                t_body = np.minimum(t_body, t)
            else:
                verts = coll.vertices @ rot.T + p
                for tri in coll.faces:
                    t = _tri_intersect(origin, dirs, verts[tri[0]],
                                       verts[tri[1]], verts[tri[2]])
                    t_body = np.minimum(t_body, t)
        closer = t_body < depth
        depth[closer] = t_body[closer]
        ids[closer] = oid
    h, w = intr.height, intr.width
    return ids.reshape(h, w), depth.reshape(h, w)


def test_renderer_matches_triangle_oracle_random_scenes():
    names = ("unit_cube", "wood_block", "iron_box", "ramp", "rubber_ball",
             "pentagon_prism", "octahedron")
    for seed in range(20):
        rng = np.random.default_rng(seed)
        w = make_world()
        for i in range(int(rng.integers(2, 5))):
            name = names[int(rng.integers(len(names)))]
            w.add_object(
                name, i + 1,
                position=tuple(rng.uniform((-2, 0.0, -2), (2, 1.5, 2))),
                rotation=q_from_euler_deg(*rng.uniform(0, 360, 3)),
            )
        av = add_camera(w, tuple(rng.uniform((-3, 0.3, -3), (3, 2.5, 3))))
        w.look_at("cam", int(rng.integers(1, len(w.objects) + 1)))
        ids, depth = render_id_depth(w, av)
        ids_o, depth_o = oracle_render(w, av)
        assert np.array_equal(ids, ids_o), f"seed {seed}: id mismatch"
        both = np.isfinite(depth) & np.isfinite(depth_o)
        assert np.array_equal(np.isfinite(depth), np.isfinite(depth_o))
        assert np.allclose(depth[both], depth_o[both], atol=1e-9, rtol=1e-9)


def test_single_cube_center_pixel():
    w = make_world(room=20.0)
    w.add_object("unit_cube", 1, position=(0.0, 0.0, 5.0))
    av = add_camera(w, (0.0, 0.5, 0.0), resolution=(33, 33))
    ids, depth = render_id_depth(w, av)
    assert ids[16, 16] == 1
    assert depth[16, 16] == pytest.approx(4.5, abs=1e-2)


def test_empty_scene_background():
    w = World()
    w.load_scene("ProcGenScene")
    av = add_camera(w, (0.0, 1.0, 0.0))
    ids, depth = render_id_depth(w, av)
    assert not ids.any()
    assert np.isinf(depth).all()


def test_depth_monotone_under_dolly():
    w = make_world(room=20.0)
    w.add_object("unit_cube", 1, position=(0.0, 0.0, 5.0))
    av = add_camera(w, (0.0, 0.5, 0.0), look_at_id=1)
    prev = None
    for z in (0.0, 1.0, 2.0, 3.0):
        w.teleport_avatar("cam", (0.0, 0.5, z))
        _, depth = render_id_depth(w, av)
        d = depth[16, 16]
        if prev is not None:
            assert d < prev
        prev = d


def test_nearer_body_wins():
    w = make_world(room=20.0)
    w.add_object("unit_cube", 1, position=(0.0, 0.0, 5.0))
    w.add_object("unit_cube", 2, position=(0.0, 0.0, 3.0))
    av = add_camera(w, (0.0, 0.5, 0.0))
    ids, _ = render_id_depth(w, av)
    assert ids[16, 16] == 2


def test_grayscale_coverage_properties():
    w = make_world(room=20.0)
    w.add_object("unit_cube", 1, position=(0.0, 0.0, 4.0))
    av = add_camera(w, (0.0, 0.5, 0.0), look_at_id=1)
    near = grayscale(w, av, 1)
    w.teleport_avatar("cam", (0.0, 0.5, -6.0))
    w.look_at("cam", 1)
    far = grayscale(w, av, 1)
    assert 0.0 < far < near <= 1.0
    # an occluder in front can only reduce coverage
    w.teleport_avatar("cam", (0.0, 0.5, 0.0))
    w.look_at("cam", 1)
    w.add_object("iron_box", 2, position=(0.0, 0.3, 2.0))
    occluded = grayscale(w, av, 1)
    assert occluded <= near
    with pytest.raises(UnknownObject):
        grayscale(w, av, 99)


def test_render_pass_gating():
    w = make_world()
    w.add_object("unit_cube", 1)
    av = add_camera(w, (0, 1, -3), look_at_id=1)
    av.pass_masks = {"_img"}
    img = render_pass(w, av, "_img")
    assert img.shape == (32, 32, 3)
    with pytest.raises(PassNotEnabled):
        render_pass(w, av, "_depth")
    av.pass_masks = {"_img", "_depth", "_id"}
    assert render_pass(w, av, "_depth").shape == (32, 32)
    assert render_pass(w, av, "_id").dtype == np.int64


def test_segmentation_colors_in_img_pass():
    w = make_world()
    obj = w.add_object("unit_cube", 1)
    av = add_camera(w, (0, 1, -3), look_at_id=1)
    av.pass_masks = {"_img"}
    img = render_pass(w, av, "_img")
    colors = {tuple(c) for c in img.reshape(-1, 3)}
    assert tuple(obj.segmentation_color) in colors


def test_bounds_match_vertex_sweep_oracle():
    rng = np.random.default_rng(4)
    w = make_world()
    for i, name in enumerate(("unit_cube", "ramp", "pentagon_prism", "iron_box")):
        pos = tuple(rng.uniform((-2, 0.5, -2), (2, 2, 2)))
        rot = q_from_euler_deg(*rng.uniform(0, 360, 3))
        w.add_object(name, i + 1, position=pos, rotation=rot)
        body = w.get_object(i + 1).body
        mat = q_to_matrix(body.orientation)
        pts = np.vstack([c.vertices @ mat.T + np.asarray(body.position)
                         for c in body.colliders])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        b = compute_bounds(w, i + 1)
        assert b.top[1] == pytest.approx(hi[1], abs=1e-9)
        assert b.bottom[1] == pytest.approx(lo[1], abs=1e-9)
        assert b.left[0] == pytest.approx(lo[0], abs=1e-9)
        assert b.right[0] == pytest.approx(hi[0], abs=1e-9)
        assert b.front[2] == pytest.approx(hi[2], abs=1e-9)
        assert b.back[2] == pytest.approx(lo[2], abs=1e-9)
        center = np.asarray(b.center)
        assert np.allclose(center, (lo + hi) / 2, atol=1e-9)


def test_sphere_bounds():
    w = make_world()
    w.add_object("rubber_ball", 1, position=(0.0, 1.0, 0.0))
    b = compute_bounds(w, 1)
    # ball collider is centered 0.1 above its origin with radius 0.1
    assert b.top[1] == pytest.approx(1.2, abs=1e-9)
    assert b.bottom[1] == pytest.approx(1.0, abs=1e-9)


def test_camera_rays_geometry():
    intr = CameraIntrinsics(54.43, 64, 64)
    dirs = camera_rays((1.0, 0.0, 0.0, 0.0), intr)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
    grid = dirs.reshape(64, 64, 3)
    assert grid[0, 32, 1] > 0       # top rows look up
    assert grid[63, 32, 1] < 0      # bottom rows look down
    assert grid[32, 0, 0] < 0       # left columns look to -x
    # vertical FOV check: extreme rows bracket the half-angle
    half = math.radians(54.43 / 2)
    ang = math.atan2(grid[0, 32, 1], grid[0, 32, 2])
    assert ang < half < ang + math.radians(54.43) / 64 * 1.5


def test_ppm_roundtrip():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(17, 23, 3), dtype=np.uint8)
    assert np.array_equal(decode_ppm(encode_ppm(img)), img)


def test_pfm_roundtrip():
    rng = np.random.default_rng(1)
    depth = rng.uniform(0.01, 50, size=(9, 13))
    out = decode_pfm(encode_pfm(depth))
    assert out.shape == depth.shape
    assert np.allclose(out, depth, rtol=1e-6)  # PFM stores float32


def test_image_blob_all_passes():
    w = make_world()
    w.add_object("unit_cube", 1)
    av = add_camera(w, (0, 1, -3), look_at_id=1)
    av.pass_masks = {"_img", "_depth", "_id"}
    import base64
    for mask in ("_img", "_depth", "_id"):
        blob = image_blob("cam", mask, render_pass(w, av, mask))
        assert blob["$type_id"] == "imag"
        assert blob["pass"] == mask
        assert blob["width"] == 32 and blob["height"] == 32
        raw = base64.b64decode(blob["data_b64"])
        if mask == "_img":
            assert decode_ppm(raw).shape == (32, 32, 3)
        elif mask == "_depth":
            assert decode_pfm(raw).shape == (32, 32)
        else:
            assert decode_id_blob(raw).shape == (32, 32)


def test_render_deterministic():
    def shot():
        w = make_world()
        w.add_object("ramp", 1, position=(0.3, 0.2, 0.1),
                     rotation=q_from_euler_deg(10, 20, 30))
        av = add_camera(w, (0, 1, -3), look_at_id=1)
        return render_id_depth(w, av)

    a_ids, a_depth = shot()
    b_ids, b_depth = shot()
    assert np.array_equal(a_ids, b_ids)
    assert np.array_equal(a_depth, b_depth)
