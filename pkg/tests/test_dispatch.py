import base64

import pytest

from deskworld.dispatch import Dispatcher
from deskworld.protocol import decode_response
from deskworld.schema import builtin_registry
from deskworld.sensors import decode_ppm


REG = builtin_registry()


def run(disp, commands):
    envs = [REG.validate(c) for c in commands]
    return disp.execute(envs)


@pytest.fixture()
def disp():
    d = Dispatcher()
    run(d, [{"$type": "load_scene", "scene_name": "ProcGenScene"},
            {"$type": "create_empty_room", "width": 12, "length": 12}])
    return d


def test_empty_list_still_steps():
    d = Dispatcher()
    out1, f1 = d.execute([])
    out2, f2 = d.execute([])
    assert out1 == [] and out2 == []
    assert (f1, f2) == (1, 2)


def test_load_scene_returns_only_frame():
    d = Dispatcher()
    out, frame = run(d, [{"$type": "load_scene", "scene_name": "ProcGenScene"}])
    assert out == [] and frame == 1


def test_fail_soft_error_blob_and_continue(disp):
    out, frame = run(disp, [
        {"$type": "add_object", "name": "no_such_model", "id": 1},
        {"$type": "add_object", "name": "unit_cube", "id": 2},
    ])
    errs = [b for b in out if b["$type_id"] == "erro"]
    assert len(errs) == 1
    assert errs[0]["index"] == 0
    assert errs[0]["command"] == "add_object"
    assert errs[0]["error"] == "RecordNotFound"
    assert 2 in disp.world.objects  # later command still applied


def test_errors_precede_data_blobs(disp):
    out, _ = run(disp, [
        {"$type": "destroy_object", "id": 999},
        {"$type": "add_object", "name": "unit_cube", "id": 1},
        {"$type": "send_transforms", "frequency": "once"},
    ])
    assert out[0]["$type_id"] == "erro"
    assert out[1]["$type_id"] == "tran"


def test_frequency_once_clears(disp):
    run(disp, [{"$type": "add_object", "name": "unit_cube", "id": 1}])
    out, _ = run(disp, [{"$type": "send_transforms", "frequency": "once"}])
    assert any(b["$type_id"] == "tran" for b in out)
    out, _ = run(disp, [])
    assert out == []


def test_frequency_always_persists_until_never(disp):
    run(disp, [{"$type": "add_object", "name": "unit_cube", "id": 1},
               {"$type": "send_transforms", "frequency": "always"}])
    for _ in range(3):
        out, _ = run(disp, [])
        assert any(b["$type_id"] == "tran" for b in out)
    run(disp, [{"$type": "send_transforms", "frequency": "never"}])
    out, _ = run(disp, [])
    assert out == []


def test_transform_blob_contents(disp):
    out, _ = run(disp, [
        {"$type": "add_object", "name": "unit_cube", "id": 7,
         "position": {"x": 1, "y": 2, "z": 3}},
        {"$type": "send_transforms", "frequency": "once"},
    ])
    tran = next(b for b in out if b["$type_id"] == "tran")
    (t,) = tran["transforms"]
    assert t["id"] == 7
    assert t["position"]["x"] == pytest.approx(1.0)
    assert set(t["rotation"]) == {"w", "x", "y", "z"}
    # statics are not part of transforms output
    assert all(x["id"] < 10 ** 9 for x in tran["transforms"])


def test_rigidbodies_blob(disp):
    out, _ = run(disp, [
        {"$type": "add_object", "name": "iron_box", "id": 1,
         "position": {"x": 0, "y": 1, "z": 0}},
        {"$type": "send_rigidbodies", "frequency": "once"},
    ])
    rigi = next(b for b in out if b["$type_id"] == "rigi")
    (r,) = rigi["rigidbodies"]
    assert r["id"] == 1 and r["mass"] > 0 and r["kinematic"] is False
    assert r["velocity"]["y"] < 0  # already falling after the step


def test_bounds_blob_selected_ids(disp):
    out, _ = run(disp, [
        {"$type": "add_object", "name": "unit_cube", "id": 1},
        {"$type": "add_object", "name": "wood_block", "id": 2,
         "position": {"x": 2, "y": 0, "z": 0}},
        {"$type": "send_bounds", "frequency": "once", "ids": [2]},
    ])
    boun = next(b for b in out if b["$type_id"] == "boun")
    assert [o["id"] for o in boun["objects"]] == [2]
    obj = boun["objects"][0]
    for k in ("top", "bottom", "center", "front", "back", "left", "right"):
        assert set(obj[k]) == {"x", "y", "z"}


def test_collisions_blob(disp):
    run(disp, [{"$type": "add_object", "name": "rubber_ball", "id": 1,
                "position": {"x": 0, "y": 0.5, "z": 0}},
               {"$type": "send_collisions", "frequency": "always"}])
    seen = []
    for _ in range(120):
        out, _ = run(disp, [])
        for b in out:
            if b["$type_id"] == "coll":
                seen += b["collisions"]
    assert seen
    c = seen[0]
    assert c["state"] == "enter"
    assert c["impulse"] > 0
    assert set(c["normal"]) == {"x", "y", "z"}


def test_images_blob_and_pass_masks(disp):
    out, _ = run(disp, [
        {"$type": "add_object", "name": "unit_cube", "id": 1},
        {"$type": "create_avatar", "type": "A_Img_Caps_Kinematic", "avatar_id": "a"},
        {"$type": "teleport_avatar_to", "avatar_id": "a",
         "position": {"x": 0, "y": 1, "z": -3}},
        {"$type": "look_at", "avatar_id": "a", "object_id": 1},
        {"$type": "set_pass_masks", "avatar_id": "a", "pass_masks": ["_img", "_depth"]},
        {"$type": "send_images", "frequency": "once", "avatar_id": "a"},
    ])
    imag = [b for b in out if b["$type_id"] == "imag"]
    passes = {b["pass"] for b in imag}
    assert passes == {"_img", "_depth"}
    rgb = next(b for b in imag if b["pass"] == "_img")
    img = decode_ppm(base64.b64decode(rgb["data_b64"]))
    assert img.shape == (256, 256, 3)


def test_grayscale_blob(disp):
    out, _ = run(disp, [
        {"$type": "add_object", "name": "unit_cube", "id": 1},
        {"$type": "create_avatar", "type": "A_Img_Caps_Kinematic", "avatar_id": "a"},
        {"$type": "teleport_avatar_to", "avatar_id": "a",
         "position": {"x": 0, "y": 1, "z": -3}},
        {"$type": "look_at", "avatar_id": "a", "object_id": 1},
        {"$type": "send_grayscale", "frequency": "once", "avatar_id": "a",
         "object_id": 1},
    ])
    gray = next(b for b in out if b["$type_id"] == "gray")
    assert 0.0 < gray["grayscale"] < 1.0


def test_set_mass_and_kinematic(disp):
    run(disp, [{"$type": "add_object", "name": "unit_cube", "id": 1}])
    body = disp.world.get_object(1).body
    m0 = body.mass
    run(disp, [{"$type": "set_mass", "id": 1, "mass": m0 * 2}])
    assert body.mass == pytest.approx(m0 * 2)
    run(disp, [{"$type": "set_kinematic_state", "id": 1, "is_kinematic": 1}])
    assert body.static  # kinematic bodies are held fixed by the solver
    y_frozen = body.position[1]
    for _ in range(20):
        run(disp, [])
    assert body.position[1] == y_frozen  # no gravity applied while frozen


def test_apply_force_moves_object(disp):
    run(disp, [{"$type": "add_object", "name": "puck", "id": 1},
               {"$type": "apply_force_to_object", "id": 1,
                "force": {"x": 1.0, "y": 0, "z": 0}}])
    assert disp.world.get_object(1).body.linear_velocity[0] > 0


def test_terminate_sets_flag(disp):
    out, frame = run(disp, [{"$type": "terminate"}])
    assert disp.terminated
    assert frame == disp.world.frame


def test_blob_tag_ordering(disp):
    out, _ = run(disp, [
        {"$type": "add_object", "name": "unit_cube", "id": 1},
        {"$type": "create_avatar", "type": "A_Img_Caps_Kinematic", "avatar_id": "a"},
        {"$type": "teleport_avatar_to", "avatar_id": "a",
         "position": {"x": 0, "y": 1, "z": -3}},
        {"$type": "look_at", "avatar_id": "a", "object_id": 1},
        {"$type": "send_images", "frequency": "once", "avatar_id": "a"},
        {"$type": "send_transforms", "frequency": "once"},
        {"$type": "send_bounds", "frequency": "once"},
    ])
    tags = [b["$type_id"] for b in out]
    assert tags == ["boun", "imag", "tran"]


def test_golden_session_table_box_avatar():
    """The published table/box/camera walkthrough, verbatim."""
    d = Dispatcher()
    lib = d.world.library
    table_record = lib.get_record("small_table_green_marble")
    table_id = 0
    out, frame = run(d, [
        {"$type": "load_scene", "scene_name": "ProcGenScene"},
        {"$type": "create_empty_room", "width": 12, "length": 12},
        {"$type": "add_object",
         "name": table_record.name,
         "url": table_record.get_url(),
         "scale_factor": table_record.scale_factor,
         "position": {"x": 0, "y": 0, "z": 0},
         "rotation": {"x": 0, "y": 0, "z": 0},
         "category": table_record.wcategory,
         "id": table_id},
        {"$type": "send_bounds", "frequency": "once"},
    ])
    top_y = 0
    for r in out:
        if r["$type_id"] == "boun":
            for o in r["objects"]:
                if o["id"] == table_id:
                    top_y = o["top"]["y"]
    assert top_y == pytest.approx(0.5, abs=5e-3)

    box_record = lib.get_record("iron_box")
    box_id = 1
    run(d, [{"$type": "add_object",
             "name": box_record.name,
             "url": box_record.get_url(),
             "scale_factor": box_record.scale_factor,
             "position": {"x": 0, "y": top_y, "z": 0},
             "rotation": {"x": 0, "y": 0, "z": 0},
             "category": box_record.wcategory,
             "id": box_id}])

    avatar_id = "a"
    out, _ = run(d, [
        {"$type": "create_avatar", "type": "A_Img_Caps_Kinematic",
         "avatar_id": avatar_id},
        {"$type": "teleport_avatar_to", "position": {"x": 1, "y": 2.5, "z": 2}},
        {"$type": "look_at", "avatar_id": avatar_id, "object_id": box_id},
        {"$type": "set_pass_masks", "avatar_id": avatar_id, "pass_masks": ["_img"]},
        {"$type": "send_images", "frequency": "once", "avatar_id": avatar_id},
    ])
    assert any(r["$type_id"] == "imag" for r in out)

    for _ in range(500):
        run(d, [])
    out, _ = run(d, [{"$type": "send_bounds", "frequency": "once"}])
    boun = next(r for r in out if r["$type_id"] == "boun")
    table = next(o for o in boun["objects"] if o["id"] == table_id)
    box = next(o for o in boun["objects"] if o["id"] == box_id)
    penetration = table["top"]["y"] - box["bottom"]["y"]
    assert penetration <= 2e-3
    assert abs(box["bottom"]["y"] - table["top"]["y"]) <= 5e-3


def test_alias_variant_session():
    """The model_name / id-alias flavour of the walkthrough also runs."""
    d = Dispatcher()
    out, _ = run(d, [
        {"$type": "load_scene", "scene_name": "ProcGenScene"},
        {"$type": "create_empty_room", "width": 12, "length": 12},
        {"$type": "add_object", "model_name": "small_table_green_marble", "id": 0},
        {"$type": "create_avatar", "type": "A_Img_Caps_Kinematic", "id": "a"},
        {"$type": "send_bounds", "frequency": "once"},
    ])
    assert any(r["$type_id"] == "boun" for r in out)
    assert "a" in d.world.avatars


def test_execute_wire_roundtrip(disp):
    envs = [REG.validate({"$type": "add_object", "name": "unit_cube", "id": 1}),
            REG.validate({"$type": "send_transforms", "frequency": "once"})]
    wire = disp.execute_wire(envs)
    outputs, frame = decode_response(wire)
    assert frame == disp.world.frame
    assert outputs[0]["$type_id"] == "tran"


def test_monotone_frame_counter(disp):
    frames = [run(disp, [])[1] for _ in range(10)]
    assert frames == sorted(frames)
    assert all(b - a == 1 for a, b in zip(frames, frames[1:]))
