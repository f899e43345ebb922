"""Command execution: one validated command list in, one stepped response out.

Commands are applied in list order with fail-soft error handling: a failing
command contributes an "erro" blob naming its index and the remaining
commands still execute.  Exactly one physics step happens per list (even an
empty one), after which the active output requests are serviced.  The
response blob order is fixed (errors first, then tags in a fixed sequence)
so identical transcripts produce identical bytes.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass

from .audio import (
    MaterialModeTable, SPEED_THRESHOLD, encode_wav, event_rng, spatialize,
    synthesize_impact,
)
from .errors import DeskworldError, SchemaViolation, StaticBody, UnknownMaterial
from .protocol import CommandEnvelope, encode_response
from .schema import CommandRegistry, builtin_registry
from .sensors import PASS_MASKS, colorize, compute_bounds, grayscale, image_blob, render_id_depth
from .world import AUDIO_MATERIALS, World

_TAG_ORDER = ("boun", "imag", "tran", "rigi", "coll", "gray", "audi")


def _vec(d: dict) -> tuple[float, float, float]:
    return (float(d["x"]), float(d["y"]), float(d["z"]))


@dataclass
class OutputRequest:
    kind: str
    frequency: str
    avatar_id: str | None = None
    ids: list | None = None
    object_id: int | None = None

    @property
    def key(self) -> tuple:
        return (self.kind, self.avatar_id, self.object_id)


class Dispatcher:
    """Applies command lists against one world and renders responses."""

    def __init__(self, world: World | None = None,
                 registry: CommandRegistry | None = None,
                 audio_table: MaterialModeTable | None = None):
        self.world = world or World()
        self.registry = registry or builtin_registry()
        self.audio_table = audio_table or MaterialModeTable()
        self.requests: dict[tuple, OutputRequest] = {}
        self.terminated = False

    # -- main cycle --------------------------------------------------------

    def execute(self, envelopes: list[CommandEnvelope]) -> tuple[list[dict], int]:
        """Returns (output blobs, frame counter after this step)."""
        errors: list[dict] = []
        for index, env in enumerate(envelopes):
            try:
                self._apply(env)
            except (DeskworldError, ValueError, KeyError) as exc:
                errors.append({
                    "$type_id": "erro",
                    "index": index,
                    "command": env.type_name,
                    "error": type(exc).__name__,
                    "message": str(exc),
                })
        events = self.world.step()
        outputs = errors + self._collect_outputs(events)
        self._clear_once()
        return outputs, self.world.frame

    def execute_wire(self, envelopes: list[CommandEnvelope]) -> bytes:
        outputs, frame = self.execute(envelopes)
        return encode_response(outputs, frame)

    def _clear_once(self) -> None:
        self.requests = {k: r for k, r in self.requests.items() if r.frequency == "always"}

    # -- command application -----------------------------------------------

    def _apply(self, env: CommandEnvelope) -> None:
        handler = getattr(self, f"_cmd_{env.type_name}", None)
        if handler is None:
            raise SchemaViolation(f"no handler for command {env.type_name}")
        handler(**env.params)

    def _cmd_load_scene(self, scene_name: str) -> None:
        self.world.load_scene(scene_name)
        self.requests.clear()

    def _cmd_create_empty_room(self, width, length) -> None:
        self.world.create_empty_room(float(width), float(length))

    def _cmd_add_object(self, name, id, url, scale_factor, position, rotation,
                        category) -> None:
        self.world.add_object(
            name, id,
            position=_vec(position),
            rotation=World.rotation_from_dict(rotation),
            scale_factor=scale_factor,
            category=category,
            url=url,
        )

    def _cmd_destroy_object(self, id) -> None:
        self.world.destroy_object(id)

    def _cmd_teleport_object(self, id, position) -> None:
        self.world.get_object(id).body.position = _vec(position)

    def _cmd_rotate_object(self, id, rotation) -> None:
        self.world.get_object(id).body.orientation = World.rotation_from_dict(rotation)

    def _cmd_apply_force_to_object(self, id, force) -> None:
        self.world.apply_impulse(id, _vec(force))

    def _cmd_set_mass(self, id, mass) -> None:
        if mass <= 0:
            raise SchemaViolation("mass must be positive")
        body = self.world.get_object(id).body
        scale = float(mass) / body.mass
        body.mass = float(mass)
        body.inertia_body = body.inertia_body * scale
        body.__post_init__()

    def _cmd_set_physic_material(self, id, dynamic_friction, static_friction,
                                 bounciness) -> None:
        if not 0.0 <= bounciness <= 1.0:
            raise SchemaViolation("bounciness outside [0, 1]")
        if dynamic_friction < 0 or static_friction < 0:
            raise SchemaViolation("friction must be non-negative")
        body = self.world.get_object(id).body
        body.dynamic_friction = float(dynamic_friction)
        body.static_friction = float(static_friction)
        body.bounciness = float(bounciness)

    def _cmd_set_audio_material(self, id, material) -> None:
        if material not in AUDIO_MATERIALS:
            raise UnknownMaterial(material)
        self.world.get_object(id).audio_material = material

    def _cmd_set_kinematic_state(self, id, is_kinematic) -> None:
        body = self.world.get_object(id).body
        body.static = bool(is_kinematic)
        if body.static:
            body.linear_velocity = (0.0, 0.0, 0.0)
            body.angular_velocity = (0.0, 0.0, 0.0)
        body.__post_init__()

    def _cmd_create_avatar(self, type, avatar_id) -> None:
        try:
            self.world.create_avatar(type, avatar_id)
        except ValueError as exc:
            raise SchemaViolation(str(exc)) from exc

    def _cmd_teleport_avatar_to(self, position, avatar_id) -> None:
        self.world.teleport_avatar(avatar_id, _vec(position))

    def _cmd_look_at(self, object_id, avatar_id) -> None:
        self.world.look_at(avatar_id, object_id)

    def _cmd_move_avatar(self, force, avatar_id) -> None:
        av = self.world.get_avatar(avatar_id)
        if av.body is None:
            raise StaticBody(f"avatar {av.avatar_id} has no physics body")
        from .physics.solver import apply_impulse
        apply_impulse(av.body, _vec(force))

    def _cmd_set_pass_masks(self, pass_masks, avatar_id) -> None:
        bad = [p for p in pass_masks if p not in PASS_MASKS]
        if bad:
            raise SchemaViolation(f"unknown pass masks {bad}")
        self.world.get_avatar(avatar_id).pass_masks = set(pass_masks)

    def _cmd_set_gravity(self, vector) -> None:
        self.world.gravity = _vec(vector)

    def _cmd_set_random_seed(self, seed) -> None:
        self.world.set_seed(seed)

    def _cmd_terminate(self) -> None:
        self.terminated = True

    # -- output requests ---------------------------------------------------

    def _request(self, kind, frequency, avatar_id=None, ids=None, object_id=None):
        req = OutputRequest(kind, frequency, avatar_id, ids, object_id)
        if frequency == "never":
            self.requests.pop(req.key, None)
        else:
            self.requests[req.key] = req

    def _cmd_send_bounds(self, frequency, ids) -> None:
        if ids is not None:
            for i in ids:
                self.world.get_object(i)
        self._request("boun", frequency, ids=ids)

    def _cmd_send_images(self, frequency, avatar_id) -> None:
        av = self.world.get_avatar(avatar_id)
        self._request("imag", frequency, avatar_id=av.avatar_id)

    def _cmd_send_transforms(self, frequency) -> None:
        self._request("tran", frequency)

    def _cmd_send_rigidbodies(self, frequency) -> None:
        self._request("rigi", frequency)

    def _cmd_send_collisions(self, frequency) -> None:
        self._request("coll", frequency)

    def _cmd_send_audio(self, frequency) -> None:
        self._request("audi", frequency)

    def _cmd_send_grayscale(self, object_id, frequency, avatar_id) -> None:
        av = self.world.get_avatar(avatar_id)
        self.world.get_object(object_id)
        self._request("gray", frequency, avatar_id=av.avatar_id, object_id=object_id)

    # -- output rendering --------------------------------------------------

    def _collect_outputs(self, events) -> list[dict]:
        out: list[dict] = []
        grouped: dict[str, list[OutputRequest]] = {}
        for req in self.requests.values():
            grouped.setdefault(req.kind, []).append(req)
        for tag in _TAG_ORDER:
            for req in sorted(grouped.get(tag, []),
                              key=lambda r: (r.avatar_id or "", r.object_id or 0)):
                out.extend(self._render_request(req, events))
        return out

    def _render_request(self, req: OutputRequest, events) -> list[dict]:
        w = self.world
        if req.kind == "boun":
            ids = req.ids if req.ids is not None else w.object_ids()
            objs = [compute_bounds(w, i).to_dict() for i in ids if i in w.objects]
            return [{"$type_id": "boun", "objects": objs}]
        if req.kind == "tran":
            rows = []
            for i in w.object_ids():
                b = w.objects[i].body
                rows.append({
                    "id": i,
                    "position": {"x": b.position[0], "y": b.position[1], "z": b.position[2]},
                    "rotation": {"w": b.orientation[0], "x": b.orientation[1],
                                 "y": b.orientation[2], "z": b.orientation[3]},
                })
            return [{"$type_id": "tran", "transforms": rows}]
        if req.kind == "rigi":
            rows = []
            for i in w.object_ids():
                b = w.objects[i].body
                rows.append({
                    "id": i,
                    "mass": b.mass,
                    "velocity": {"x": b.linear_velocity[0], "y": b.linear_velocity[1],
                                 "z": b.linear_velocity[2]},
                    "angular_velocity": {"x": b.angular_velocity[0],
                                         "y": b.angular_velocity[1],
                                         "z": b.angular_velocity[2]},
                    "kinematic": b.static,
                })
            return [{"$type_id": "rigi", "rigidbodies": rows}]
        if req.kind == "coll":
            rows = [{
                "ids": list(e.ids),
                "point": {"x": e.point[0], "y": e.point[1], "z": e.point[2]},
                "normal": {"x": e.normal[0], "y": e.normal[1], "z": e.normal[2]},
                "relative_velocity": e.relative_normal_speed,
                "impulse": e.impulse,
                "state": e.state,
            } for e in events]
            return [{"$type_id": "coll", "frame": w.frame, "collisions": rows}]
        if req.kind == "gray":
            av = w.get_avatar(req.avatar_id)
            try:
                value = grayscale(w, av, req.object_id)
            except DeskworldError:
                value = 0.0
            return [{"$type_id": "gray", "avatar_id": av.avatar_id,
                     "object_id": req.object_id, "grayscale": value}]
        if req.kind == "imag":
            av = w.get_avatar(req.avatar_id)
            ids, depth = render_id_depth(w, av)
            blobs = []
            for pass_name in PASS_MASKS:
                if pass_name not in av.pass_masks:
                    continue
                if pass_name == "_img":
                    blobs.append(image_blob(av.avatar_id, "_img", colorize(w, ids)))
                elif pass_name == "_id":
                    blobs.append(image_blob(av.avatar_id, "_id", ids))
                else:
                    blobs.append(image_blob(av.avatar_id, "_depth", depth))
            return blobs
        if req.kind == "audi":
            return self._render_audio(events)
        return []

    def _render_audio(self, events) -> list[dict]:
        w = self.world
        blobs = []
        index = 0
        listener = None
        if w.avatars:
            listener = w.avatars[sorted(w.avatars)[0]]
        for e in events:
            if e.state != "enter" or e.relative_normal_speed <= SPEED_THRESHOLD:
                continue
            pair = []
            for bid in e.ids:
                body = w.body_for_id(bid)
                material = w.audio_material_for(bid) or "wood"
                mass = float("inf") if (body is None or body.static) else body.mass
                pair.append((material, mass))
            # struck is the more massive participant; striker excites it
            struck, striker = sorted(pair, key=lambda p: p[1], reverse=True)
            rng = event_rng(w.seed, e.frame, index)
            clip = synthesize_impact(e, struck, striker, rng, self.audio_table)
            if listener is not None:
                pos, orient = listener.pose
                samples = spatialize(clip, pos, orient, w, exclude_ids=e.ids)
            else:
                samples = clip.samples
            blobs.append({
                "$type_id": "audi",
                "ids": list(e.ids),
                "frame": e.frame,
                "sample_rate": clip.sample_rate,
                "wav_b64": base64.b64encode(encode_wav(samples)).decode("ascii"),
            })
            index += 1
        return blobs
