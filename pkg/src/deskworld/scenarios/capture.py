"""Two-loop dataset capture with grayscale pose rejection.

Loop 1 (positional) runs at low resolution: candidate camera/object poses
are scored by rendering the target's coverage twice — once with the pair
lifted high above the scene (no occluders) and once in place — and a pose
is accepted when the occlusion criterion passes.  Accepted poses are
cached.  Loop 2 replays the cache at full resolution and writes images.

The published description of the criterion ("difference in grayscale must
exceed 0.55") reads two ways; both are implemented behind
``criterion = "ratio" | "difference"`` with ratio as the default.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..errors import NoValidPose
from ..sensors import colorize, encode_ppm, grayscale, render_id_depth
from ..world import ModelLibrary, World

LIFT_HEIGHT = 50.0   # meters added to both camera and object for the clean pass


@dataclass
class CaptureConfig:
    positional_resolution: int = 32
    final_resolution: int = 256
    grayscale_threshold: float = 0.55
    shots_per_model: int = 20
    seed: int = 0
    criterion: str = "ratio"          # "ratio" | "difference"
    min_coverage: float = 0.005       # unoccluded coverage floor
    max_attempts: int = 10_000
    room_size: float = 6.0
    clutter_count: int = 3

    def __post_init__(self) -> None:
        if not 0.0 < self.grayscale_threshold < 1.0:
            raise ValueError("grayscale_threshold outside (0, 1)")
        if self.positional_resolution < 1 or self.final_resolution < 1:
            raise ValueError("resolutions must be positive")
        if self.criterion not in ("ratio", "difference"):
            raise ValueError("criterion must be 'ratio' or 'difference'")


CLUTTER_MODELS = ("unit_cube", "cardboard_box", "ramp")


def _build_scene(world: World, model: str, rng: np.random.Generator,
                 cfg: CaptureConfig) -> tuple[int, list[int]]:
    world.load_scene("capture")
    world.create_empty_room(cfg.room_size, cfg.room_size)
    target_id = 1
    world.add_object(model, target_id, position=(0.0, 0.001, 0.0))
    clutter_ids = []
    half = cfg.room_size / 2 - 0.8
    for k in range(cfg.clutter_count):
        cid = 100 + k
        pos = (float(rng.uniform(-half, half)), 0.001, float(rng.uniform(-half, half)))
        world.add_object(CLUTTER_MODELS[k % len(CLUTTER_MODELS)], cid, position=pos)
        clutter_ids.append(cid)
    return target_id, clutter_ids


def _sample_pose(world: World, target_id: int, rng: np.random.Generator,
                 cfg: CaptureConfig) -> dict:
    half = cfg.room_size / 2 - 0.4
    obj_pos = (float(rng.uniform(-half, half)), 0.001, float(rng.uniform(-half, half)))
    radius = float(rng.uniform(0.6, 2.5))
    azimuth = float(rng.uniform(0.0, 2.0 * math.pi))
    height = float(rng.uniform(0.2, 2.0))
    cam_pos = (obj_pos[0] + radius * math.cos(azimuth), height,
               obj_pos[2] + radius * math.sin(azimuth))
    return {"object_position": obj_pos, "camera_position": cam_pos}


def _score_pose(world: World, avatar, target_id: int, pose: dict,
                cfg: CaptureConfig) -> tuple[float, float]:
    """(unoccluded coverage, occluded coverage) for one candidate pose."""
    body = world.get_object(target_id).body
    # occluded pass: everything in place
    body.position = tuple(pose["object_position"])
    world.teleport_avatar(avatar.avatar_id, tuple(pose["camera_position"]))
    world.look_at(avatar.avatar_id, target_id)
    occluded = grayscale(world, avatar, target_id)
    # clean pass: same relative pose, lifted far above the scenery
    lift = (0.0, LIFT_HEIGHT, 0.0)
    body.position = tuple(np.add(pose["object_position"], lift))
    world.teleport_avatar(avatar.avatar_id, tuple(np.add(pose["camera_position"], lift)))
    world.look_at(avatar.avatar_id, target_id)
    unoccluded = grayscale(world, avatar, target_id)
    # restore
    body.position = tuple(pose["object_position"])
    world.teleport_avatar(avatar.avatar_id, tuple(pose["camera_position"]))
    world.look_at(avatar.avatar_id, target_id)
    return unoccluded, occluded


def pose_accepted(unoccluded: float, occluded: float, cfg: CaptureConfig) -> bool:
    if unoccluded < cfg.min_coverage:
        return False
    if cfg.criterion == "ratio":
        return occluded / unoccluded > cfg.grayscale_threshold
    # literal reading: the grayscale difference itself must exceed the threshold
    return unoccluded - occluded > cfg.grayscale_threshold


def capture_dataset(cfg: CaptureConfig, model_names: list[str],
                    out_dir: str | Path | None = None,
                    library: ModelLibrary | None = None) -> dict:
    """Returns the manifest; writes images + manifest.json when out_dir given."""
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    manifest = {"config": asdict(cfg), "models": []}
    for model_index, model in enumerate(model_names):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, model_index)))
        world = World(library, seed=cfg.seed)
        target_id, clutter_ids = _build_scene(world, model, rng, cfg)
        avatar = world.create_avatar("A_Img_Caps_Kinematic", "capture_cam")
        avatar.pass_masks = {"_img", "_id"}
        res = cfg.positional_resolution
        avatar.resolution = (res, res)
        shots = []
        for shot in range(cfg.shots_per_model):
            accepted = None
            for _ in range(cfg.max_attempts):
                pose = _sample_pose(world, target_id, rng, cfg)
                unocc, occ = _score_pose(world, avatar, target_id, pose, cfg)
                if pose_accepted(unocc, occ, cfg):
                    accepted = {**pose, "unoccluded": unocc, "occluded": occ,
                                "shot": shot}
                    break
            if accepted is None:
                raise NoValidPose(f"{model}: no pose within {cfg.max_attempts} attempts")
            shots.append(accepted)
        # loop 2: replay the cached poses at full resolution
        avatar.resolution = (cfg.final_resolution, cfg.final_resolution)
        for entry in shots:
            body = world.get_object(target_id).body
            body.position = tuple(entry["object_position"])
            world.teleport_avatar(avatar.avatar_id, tuple(entry["camera_position"]))
            world.look_at(avatar.avatar_id, target_id)
            ids, _ = render_id_depth(world, avatar)
            ppm = encode_ppm(colorize(world, ids))
            filename = f"{model}_{entry['shot']:03d}.ppm"
            entry["file"] = filename
            if out is not None:
                (out / filename).write_bytes(ppm)
        manifest["models"].append({
            "name": model,
            "clutter_ids": clutter_ids,
            "shots": shots,
        })
    if out is not None:
        (out / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest
