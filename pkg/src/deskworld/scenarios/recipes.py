"""Rigid-body scenario generators with trajectory dataset export.

Each trial owns an independent world and rng substream derived from
(seed, trial index), so generation is a pure function of (seed, config,
library) and reruns are byte-identical.  One JSON-lines file per trial
(step records) plus a manifest; occlusion-flavored kinds additionally
embed low-resolution id-pass frames so reemergence is checkable from data.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..audio import encode_wav, event_rng, synthesize_impact
from ..errors import SubThresholdImpact
from ..sensors import render_id_depth
from ..world import ModelLibrary, World

SCENARIO_KINDS = (
    "binary_collisions", "complex_collisions", "object_occlusion",
    "object_permanence", "stability", "containment", "sliding_rolling",
    "bouncing",
)

# recorded randomization ranges (documented defaults, not physics claims)
DROP_HEIGHT_RANGE = (0.02, 0.75)       # m
IMPULSE_RANGE = (1.0, 20.0)            # N*s
STACK_OFFSET_RANGE = (0.0, 0.6)        # fraction of member width
STABILITY_MOVE_LIMIT = 0.1             # m horizontal -> "fell"
ID_FRAME_RESOLUTION = 64
ID_FRAME_EVERY = 5

TOY_MODELS = ("wood_block", "domino", "octahedron", "pentagon_prism", "puck")
STACK_MODELS = ("wood_block", "brick", "cardboard_box", "iron_box")
DROP_MODELS = ("wood_block", "brick", "rubber_ball", "steel_ball", "octahedron",
               "cardboard_box")
ROLL_MODELS = ("cylinder", "rubber_ball", "steel_ball", "wood_block")
CONTAINED_MODELS = ("glass_marble", "domino")


@dataclass
class ScenarioSpec:
    kind: str
    seed: int = 0
    trial_count: int = 10
    steps_per_trial: int = 500
    emit_audio: bool = False

    def __post_init__(self) -> None:
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")


@dataclass
class TrialSetup:
    objects: list[dict]                  # [{"id": ..., "name": ...}]
    labels: dict
    impulses: list[tuple[int, tuple]]    # applied before the first step
    watch_ids: list[int]                 # emit id frames when nonempty
    camera: dict | None = None


def _place(world: World, name: str, oid: int, pos, rng=None, yaw=None) -> dict:
    rot = None
    if yaw is not None:
        rot = World.rotation_from_dict({"x": 0.0, "y": yaw, "z": 0.0})
    world.add_object(name, oid, position=pos, rotation=rot)
    return {"id": oid, "name": name}


def _aimed_impulse(world: World, source_id: int, target_id: int, magnitude: float,
                   rng: np.random.Generator, jitter_deg: float = 5.0) -> tuple:
    """Impulse from source toward target center, within jitter_deg of dead-on."""
    src = world.get_object(source_id).body.com
    dst = world.get_object(target_id).body.com
    d = np.array(dst) - np.array(src)
    d[1] = 0.0
    d /= np.linalg.norm(d)
    angle = math.radians(rng.uniform(-jitter_deg, jitter_deg))
    c, s = math.cos(angle), math.sin(angle)
    rotated = (c * d[0] - s * d[2], 0.0, s * d[0] + c * d[2])
    return tuple(float(magnitude) * x for x in rotated)


# -- per-kind scene builders ----------------------------------------------


def _setup_binary_collisions(world, rng) -> TrialSetup:
    a_name = TOY_MODELS[int(rng.integers(len(TOY_MODELS)))]
    b_name = TOY_MODELS[int(rng.integers(len(TOY_MODELS)))]
    gap = float(rng.uniform(0.4, 1.2))
    objs = [_place(world, a_name, 1, (-gap / 2, 0.001, 0.0)),
            _place(world, b_name, 2, (gap / 2, 0.001, float(rng.uniform(-0.05, 0.05))))]
    magnitude = float(rng.uniform(*IMPULSE_RANGE))
    # cap the resulting launch speed: tiny toys + huge impulses would tunnel
    mass = world.get_object(1).body.mass
    capped = min(magnitude, 3.0 * mass)
    imp = _aimed_impulse(world, 1, 2, capped, rng)
    return TrialSetup(objs, {"impulse_magnitude": magnitude,
                             "applied_impulse": capped}, [(1, imp)], [])


def _setup_complex_collisions(world, rng) -> TrialSetup:
    count = int(rng.integers(4, 9))
    objs = []
    for k in range(count):
        name = DROP_MODELS[int(rng.integers(len(DROP_MODELS)))]
        pos = (float(rng.uniform(-0.8, 0.8)),
               float(rng.uniform(*DROP_HEIGHT_RANGE)),
               float(rng.uniform(-0.8, 0.8)))
        objs.append(_place(world, name, k + 1, pos, yaw=float(rng.uniform(0, 360))))
    return TrialSetup(objs, {"drop_count": count}, [], [])


def _setup_object_occlusion(world, rng) -> TrialSetup:
    big = _place(world, "unit_cube", 1, (0.0, 0.001, 0.0))
    angle = float(rng.uniform(0.0, 2 * math.pi))
    r = float(rng.uniform(0.7, 1.2))
    small_name = TOY_MODELS[int(rng.integers(len(TOY_MODELS)))]
    small = _place(world, small_name, 2,
                   (r * math.cos(angle), 0.001, r * math.sin(angle)))
    camera = {"position": (-1.8 * math.cos(angle), 0.6, -1.8 * math.sin(angle)),
              "look_at": 1}
    return TrialSetup([big, small], {"occluder": 1, "occluded": 2},
                      [], [2], camera)


def _setup_object_permanence(world, rng) -> TrialSetup:
    occluder = _place(world, "unit_cube", 1, (0.0, 0.001, 0.0))
    ball = _place(world, "rubber_ball", 2, (-2.0, 0.001, float(rng.uniform(0.8, 1.2))))
    speed = float(rng.uniform(2.0, 5.0))
    mass = world.get_object(2).body.mass
    camera = {"position": (0.0, 0.5, 2.8), "look_at": 1}
    return TrialSetup([occluder, ball], {"roll_speed": speed},
                      [(2, (speed * mass, 0.0, 0.0))], [2], camera)


def _setup_stability(world, rng) -> TrialSetup:
    count = int(rng.integers(4, 8))
    objs = []
    x = z = 0.0
    y = 0.001
    for k in range(count):
        name = STACK_MODELS[int(rng.integers(len(STACK_MODELS)))]
        objs.append(_place(world, name, k + 1, (x, y, z)))
        from ..sensors import compute_bounds
        b = compute_bounds(world, k + 1)
        width = b.right[0] - b.left[0]
        y = b.top[1] + 0.001
        frac = float(rng.uniform(*STACK_OFFSET_RANGE))
        theta = float(rng.uniform(0.0, 2 * math.pi))
        x += frac * width * math.cos(theta)
        z += frac * width * math.sin(theta)
    return TrialSetup(objs, {"stack_count": count}, [], [])


def _setup_containment(world, rng) -> TrialSetup:
    bowl = _place(world, "bowl", 1, (0.0, 0.001, 0.0))
    name = CONTAINED_MODELS[int(rng.integers(len(CONTAINED_MODELS)))]
    pos = (float(rng.uniform(-0.04, 0.04)), float(rng.uniform(0.2, 0.4)),
           float(rng.uniform(-0.04, 0.04)))
    small = _place(world, name, 2, pos)
    return TrialSetup([bowl, small], {"container": 1, "contained": 2}, [], [])


def _setup_sliding_rolling(world, rng) -> TrialSetup:
    ramp = _place(world, "ramp", 1, (0.0, 0.001, 0.0))
    world.get_object(1).body.static = True
    world.get_object(1).body.__post_init__()
    count = int(rng.integers(1, 4))
    objs = [ramp]
    for k in range(count):
        name = ROLL_MODELS[int(rng.integers(len(ROLL_MODELS)))]
        pos = (float(rng.uniform(-0.35, -0.2)),
               float(rng.uniform(0.4, 0.6)),
               float(rng.uniform(-0.15, 0.15)))
        objs.append(_place(world, name, k + 2, pos))
    return TrialSetup(objs, {"rollers": count}, [], [])


def _setup_bouncing(world, rng) -> TrialSetup:
    count = int(rng.integers(2, 5))
    objs = []
    impulses = []
    for k in range(count):
        oid = k + 1
        objs.append(_place(world, "rubber_ball", oid,
                           (float(rng.uniform(-1.0, 1.0)),
                            float(rng.uniform(0.3, 1.0)),
                            float(rng.uniform(-1.0, 1.0)))))
        body = world.get_object(oid).body
        body.bounciness = float(rng.uniform(0.5, 0.95))
        mag = float(rng.uniform(*IMPULSE_RANGE))
        theta = float(rng.uniform(0.0, 2 * math.pi))
        impulses.append((oid, (mag * math.cos(theta), 0.0, mag * math.sin(theta))))
    return TrialSetup(objs, {"ball_count": count}, impulses, [])


_BUILDERS = {
    "binary_collisions": _setup_binary_collisions,
    "complex_collisions": _setup_complex_collisions,
    "object_occlusion": _setup_object_occlusion,
    "object_permanence": _setup_object_permanence,
    "stability": _setup_stability,
    "containment": _setup_containment,
    "sliding_rolling": _setup_sliding_rolling,
    "bouncing": _setup_bouncing,
}

ROOM_SIZE = {"binary_collisions": 6.0, "complex_collisions": 4.0,
             "object_occlusion": 8.0, "object_permanence": 8.0,
             "stability": 4.0, "containment": 3.0, "sliding_rolling": 6.0,
             "bouncing": 5.0}


# -- trial driver ----------------------------------------------------------


def _round6(x: float) -> float:
    return round(float(x), 6)


def _step_record(world: World, step: int, events) -> dict:
    transforms = []
    for oid in world.object_ids():
        b = world.objects[oid].body
        transforms.append({
            "id": oid,
            "position": [_round6(v) for v in b.position],
            "rotation": [_round6(v) for v in b.orientation],
            "velocity": [_round6(v) for v in b.linear_velocity],
            "angular_velocity": [_round6(v) for v in b.angular_velocity],
        })
    collisions = [{
        "ids": list(e.ids),
        "state": e.state,
        "impulse": _round6(e.impulse),
        "speed": _round6(e.relative_normal_speed),
        "point": [_round6(v) for v in e.point],
        "normal": [_round6(v) for v in e.normal],
    } for e in events]
    return {"step": step, "transforms": transforms, "collisions": collisions}


def run_trial(spec: ScenarioSpec, trial: int,
              library: ModelLibrary | None = None) -> tuple[dict, list[str], list[bytes]]:
    """Returns (trial manifest entry, JSONL lines, optional WAV clips)."""
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, trial)))
    world = World(library, seed=spec.seed)
    world.create_empty_room(ROOM_SIZE[spec.kind], ROOM_SIZE[spec.kind])
    setup = _BUILDERS[spec.kind](world, rng)
    avatar = None
    if setup.watch_ids:
        avatar = world.create_avatar("A_Img_Caps_Kinematic", "scenario_cam")
        avatar.resolution = (ID_FRAME_RESOLUTION, ID_FRAME_RESOLUTION)
        avatar.pass_masks = {"_id"}
        cam = setup.camera or {"position": (0.0, 1.0, 3.0), "look_at": setup.watch_ids[0]}
        world.teleport_avatar(avatar.avatar_id, tuple(cam["position"]))
        world.look_at(avatar.avatar_id, cam["look_at"])
    for oid, impulse in setup.impulses:
        world.apply_impulse(oid, impulse)

    start = {o["id"]: world.get_object(o["id"]).body.com for o in setup.objects}
    lines: list[str] = []
    clips: list[bytes] = []
    audio_index = 0
    for step in range(spec.steps_per_trial):
        events = world.step()
        record = _step_record(world, step, events)
        if avatar is not None and step % ID_FRAME_EVERY == 0:
            ids, _ = render_id_depth(world, avatar)
            record["id_frame"] = {
                "resolution": ID_FRAME_RESOLUTION,
                "watch_ids": setup.watch_ids,
                "data_b64": base64.b64encode(ids.astype("<i8").tobytes()).decode(),
            }
        if spec.emit_audio:
            for e in events:
                if e.state != "enter" or e.relative_normal_speed <= 0.01:
                    continue
                materials = []
                for bid in e.ids:
                    body = world.body_for_id(bid)
                    mat = world.audio_material_for(bid) or "wood"
                    mass = float("inf") if (body is None or body.static) else body.mass
                    materials.append((mat, mass))
                struck, striker = sorted(materials, key=lambda p: p[1], reverse=True)
                try:
                    clip = synthesize_impact(
                        e, struck, striker, event_rng(spec.seed, e.frame, audio_index))
                except SubThresholdImpact:
                    continue
                record.setdefault("audio_clips", []).append(len(clips))
                clips.append(encode_wav(clip.samples))
                audio_index += 1
        lines.append(json.dumps(record, sort_keys=True, separators=(",", ":")))

    labels = dict(setup.labels)
    if spec.kind == "stability":
        moved = {}
        for o in setup.objects:
            c0 = start[o["id"]]
            c1 = world.get_object(o["id"]).body.com
            moved[o["id"]] = math.hypot(c1[0] - c0[0], c1[2] - c0[2])
        stood = all(m < STABILITY_MOVE_LIMIT for m in moved.values())
        labels["stood"] = stood
        labels["horizontal_moves"] = {str(k): _round6(v) for k, v in moved.items()}
    entry = {"trial": trial, "objects": setup.objects, "labels": labels}
    return entry, lines, clips


def generate_scenario(spec: ScenarioSpec, out_dir: str | Path | None = None,
                      library: ModelLibrary | None = None) -> dict:
    """Runs all trials; returns the manifest, writing files when out_dir given."""
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    manifest = {"spec": asdict(spec), "trials": []}
    for trial in range(spec.trial_count):
        entry, lines, clips = run_trial(spec, trial, library)
        filename = f"trial_{trial:03d}.jsonl"
        entry["file"] = filename
        if out is not None:
            (out / filename).write_text("\n".join(lines) + "\n")
            for k, wav in enumerate(clips):
                (out / f"trial_{trial:03d}_clip_{k:03d}.wav").write_bytes(wav)
        entry["clip_count"] = len(clips)
        manifest["trials"].append(entry)
    if out is not None:
        (out / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest
